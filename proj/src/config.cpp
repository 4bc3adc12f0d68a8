#include <algorithm>
#include <cmath>
#include <type_traits>
#include <functional>
#include <map>
#include <sstream>

#include "brox/harness.hpp"

namespace brox {

using nlohmann::json;

namespace {

std::string joined(const std::vector<std::string>& problems) {
    std::string out = "invalid configuration:";
    for (const auto& p : problems) out += "\n  " + p;
    return out;
}

// Field readers: each records a problem instead of throwing so that one pass
// lists every error.
using Problems = std::vector<std::string>;

void read(const json& v, double& out, const std::string& key, Problems& errs) {
    if (v.is_number()) {
        out = v.get<double>();
        if (!std::isfinite(out)) errs.push_back(key + ": must be finite");
    } else {
        errs.push_back(key + ": expected a number");
    }
}

template <typename T>
    requires(std::is_unsigned_v<T> && !std::is_same_v<T, bool>)
void read(const json& v, T& out, const std::string& key, Problems& errs) {
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        out = v.get<T>();
    } else if (v.is_number_integer()) {
        errs.push_back(key + ": must be non-negative");
    } else {
        errs.push_back(key + ": expected a non-negative integer");
    }
}

void read(const json& v, int& out, const std::string& key, Problems& errs) {
    if (v.is_number_integer()) {
        out = v.get<int>();
    } else {
        errs.push_back(key + ": expected an integer");
    }
}

void read(const json& v, bool& out, const std::string& key, Problems& errs) {
    if (v.is_boolean()) {
        out = v.get<bool>();
    } else {
        errs.push_back(key + ": expected true or false");
    }
}

void read(const json& v, std::string& out, const std::string& key, Problems& errs) {
    if (v.is_string()) {
        out = v.get<std::string>();
    } else {
        errs.push_back(key + ": expected a string");
    }
}

void read(const json& v, std::vector<double>& out, const std::string& key, Problems& errs) {
    if (v.is_number()) {
        out = {v.get<double>()};
        return;
    }
    if (!v.is_array()) {
        errs.push_back(key + ": expected a list of numbers");
        return;
    }
    out.clear();
    for (const auto& e : v) {
        if (!e.is_number()) {
            errs.push_back(key + ": expected a list of numbers");
            return;
        }
        out.push_back(e.get<double>());
    }
}

void read(const json& v, std::optional<double>& out, const std::string& key, Problems& errs) {
    if (v.is_null()) {
        out.reset();
        return;
    }
    double x = 0;
    read(v, x, key, errs);
    out = x;
}

using Setter = std::function<void(ExperimentConfig&, const json&, Problems&)>;

template <typename T>
Setter field(T ExperimentConfig::*member, const char* key) {
    return [member, key](ExperimentConfig& c, const json& v, Problems& errs) {
        read(v, c.*member, key, errs);
    };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"v_grid", field(&ExperimentConfig::v_grid, "v_grid")},
        {"replicates", field(&ExperimentConfig::replicates, "replicates")},
        {"base_seed", field(&ExperimentConfig::base_seed, "base_seed")},
        {"step", field(&ExperimentConfig::step, "step")},
        {"growth", field(&ExperimentConfig::growth, "growth")},
        {"dt", field(&ExperimentConfig::dt, "dt")},
        {"bin_width", field(&ExperimentConfig::bin_width, "bin_width")},
        {"knot_budget", field(&ExperimentConfig::knot_budget, "knot_budget")},
        {"max_steps", field(&ExperimentConfig::max_steps, "max_steps")},
        {"delta", field(&ExperimentConfig::delta, "delta")},
        {"r_policy", field(&ExperimentConfig::r_policy, "r_policy")},
        {"c", field(&ExperimentConfig::c, "c")},
        {"c0", field(&ExperimentConfig::c0, "c0")},
        {"c1", field(&ExperimentConfig::c1, "c1")},
        {"c2", field(&ExperimentConfig::c2, "c2")},
        {"c3", field(&ExperimentConfig::c3, "c3")},
        {"condition_on_gamma", field(&ExperimentConfig::condition_on_gamma, "condition_on_gamma")},
        {"max_rejections", field(&ExperimentConfig::max_rejections, "max_rejections")},
        {"a", field(&ExperimentConfig::a, "a")},
        {"y_grid", field(&ExperimentConfig::y_grid, "y_grid")},
        {"r", field(&ExperimentConfig::r, "r")},
        {"ceiling", field(&ExperimentConfig::ceiling, "ceiling")},
        {"sup_replicates", field(&ExperimentConfig::sup_replicates, "sup_replicates")},
        {"sup_dt", field(&ExperimentConfig::sup_dt, "sup_dt")},
        {"horizon_factor", field(&ExperimentConfig::horizon_factor, "horizon_factor")},
        {"ks_threshold", field(&ExperimentConfig::ks_threshold, "ks_threshold")},
        {"n_max", field(&ExperimentConfig::n_max, "n_max")},
        {"lambdas", field(&ExperimentConfig::lambdas, "lambdas")},
        {"eta_lambdas", field(&ExperimentConfig::eta_lambdas, "eta_lambdas")},
        {"slack", field(&ExperimentConfig::slack, "slack")},
        {"gamma_ceiling", field(&ExperimentConfig::gamma_ceiling, "gamma_ceiling")},
        {"frequency_floor", field(&ExperimentConfig::frequency_floor, "frequency_floor")},
        {"occupation_floor", field(&ExperimentConfig::occupation_floor, "occupation_floor")},
        {"truncation_cap", field(&ExperimentConfig::truncation_cap, "truncation_cap")},
        {"eps", field(&ExperimentConfig::eps, "eps")},
        {"sigma_checks", field(&ExperimentConfig::sigma_checks, "sigma_checks")},
        {"sigma_step_factor", field(&ExperimentConfig::sigma_step_factor, "sigma_step_factor")},
        {"t", field(&ExperimentConfig::t, "t")},
        {"workers", field(&ExperimentConfig::workers, "workers")},
        {"output", field(&ExperimentConfig::output, "output")},
    };
    return table;
}

bool uses_valley_params(const std::string& e) {
    return e == "gamma" || e == "valley-depth" || e == "sandwich" || e == "localization" ||
           e == "profile";
}

void check_positive(double x, const char* key, Problems& errs) {
    if (!(x > 0)) errs.push_back(std::string(key) + ": must be > 0");
}

void validate(const ExperimentConfig& c, Problems& errs) {
    const std::string& e = c.experiment;
    if (c.replicates < 1) errs.push_back("replicates: must be >= 1");
    if (c.workers < 1) errs.push_back("workers: must be >= 1");
    check_positive(c.step, "step", errs);
    check_positive(c.dt, "dt", errs);
    check_positive(c.bin_width, "bin_width", errs);
    if (c.growth < 0) errs.push_back("growth: must be >= 0");
    if (c.knot_budget < 2) errs.push_back("knot_budget: must be >= 2");
    if (c.max_steps < 1) errs.push_back("max_steps: must be >= 1");
    if (!(c.delta > 0 && c.delta < 1)) errs.push_back("delta: must lie in (0, 1)");
    if (c.r_policy != "unit" && c.r_policy != "i_v" && c.r_policy != "I_v")
        errs.push_back("r_policy: must be one of unit, i_v, I_v (got \"" + c.r_policy + "\")");
    if (!(c.truncation_cap >= 0 && c.truncation_cap <= 1))
        errs.push_back("truncation_cap: must lie in [0, 1]");
    if (c.slack <= 0) errs.push_back("slack: must be > 0");
    check_positive(c.eps, "eps", errs);

    const bool needs_v = e != "ray-knight" && e != "ladder" && e != "simulate";
    if (needs_v && c.v_grid.empty()) errs.push_back("v_grid: must not be empty");
    if (e == "gamma" && c.v_grid.size() < 2) errs.push_back("v_grid: gamma needs at least two values");
    for (std::size_t i = 1; i < c.v_grid.size(); ++i)
        if (!(c.v_grid[i] > c.v_grid[i - 1]))
            errs.push_back("v_grid: values must be strictly increasing");
    if (uses_valley_params(e)) {
        for (double v : c.v_grid) {
            try {
                c.params(v).validate();
            } catch (const InvalidConfig& ex) {
                errs.push_back(std::string("v_grid: ") + ex.what());
            }
        }
    }
    if (e == "tanaka") {
        for (double v : c.v_grid)
            if (!(v > 0)) errs.push_back("v_grid: tanaka needs v > 0");
        check_positive(c.horizon_factor, "horizon_factor", errs);
        if (!(c.ks_threshold > 0 && c.ks_threshold < 1))
            errs.push_back("ks_threshold: must lie in (0, 1)");
    }
    if (e == "ray-knight") {
        check_positive(c.a, "a", errs);
        check_positive(c.r, "r", errs);
        check_positive(c.sup_dt, "sup_dt", errs);
        if (c.y_grid.empty()) errs.push_back("y_grid: must not be empty");
        for (double y : c.y_grid) {
            if (!(y > 0 && y <= c.a)) errs.push_back("y_grid: values must lie in (0, a]");
            if (!(y + c.bin_width / 2 < c.ceiling))
                errs.push_back("ceiling: must exceed every y in y_grid by half a bin");
        }
    }
    if (e == "ladder") {
        if (c.n_max < 3) errs.push_back("n_max: must be >= 3");
        for (double l : c.lambdas)
            if (!(l > 0)) errs.push_back("lambdas: values must be > 0");
        for (double l : c.eta_lambdas)
            if (!(l > 0)) errs.push_back("eta_lambdas: values must be > 0");
    }
    if (e == "sandwich" || e == "profile")
        check_positive(c.sigma_step_factor, "sigma_step_factor", errs);
    if (e == "simulate") check_positive(c.t, "t", errs);
    if (!(c.frequency_floor >= 0 && c.frequency_floor <= 1))
        errs.push_back("frequency_floor: must lie in [0, 1]");
    if (!(c.occupation_floor >= 0 && c.occupation_floor <= 1))
        errs.push_back("occupation_floor: must lie in [0, 1]");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> p) : InvalidConfig(joined(p)), problems(std::move(p)) {}

ValleyParams ExperimentConfig::params(double v) const {
    if (c) return ValleyParams::from_c(v, *c);
    return ValleyParams{v, c1, c2, c3};
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"ray-knight", "tanaka",       "gamma",
                                                   "valley-depth", "ladder",     "sandwich",
                                                   "localization", "profile",    "simulate"};
    return names;
}

ExperimentConfig defaults_for(const std::string& e) {
    ExperimentConfig c;
    c.experiment = e;
    if (e == "ray-knight") {
        c.replicates = 10000;
        c.step = 1e-4;
        c.bin_width = 0.01;
        c.a = 1;
        c.y_grid = {0.25, 0.5, 0.75};
        c.r = 1;
    } else if (e == "tanaka") {
        c.v_grid = {4};
        c.replicates = 5000;
        c.step = 1e-3;
    } else if (e == "gamma") {
        c.v_grid = {10, 14};
        c.replicates = 2000;
        c.step = 0.01;
        c.knot_budget = 2'000'000;
    } else if (e == "valley-depth") {
        c.v_grid = {10};
        c.replicates = 5000;
        c.step = 0.01;
    } else if (e == "ladder") {
        c.replicates = 2000;
        c.step = 2.5e-3;
        c.growth = 2.5e-5;
        c.knot_budget = 2'000'000;
        c.lambdas = {4, 8};
        c.eta_lambdas = {0.05, 0.1, 0.2, 0.4};
    } else if (e == "sandwich") {
        c.v_grid = {6, 8, 10};
        c.replicates = 300;
        c.step = 0.05;
        c.sigma_checks = false;  // triples the step budget
    } else if (e == "localization") {
        c.v_grid = {8};
        c.replicates = 300;
        c.step = 0.05;
        c.frequency_floor = 0.9;
    } else if (e == "profile") {
        c.v_grid = {6, 8};
        c.replicates = 100;
        c.step = 0.05;
        c.delta = 0.3;
        c.sigma_step_factor = 20;
        c.frequency_floor = 0.95;
    } else if (e == "simulate") {
        c.step = 0.05;
        c.t = 100;
    }
    return c;
}

ExperimentConfig parse_config(const json& j) {
    Problems errs;
    if (!j.is_object()) throw ConfigError({"configuration must be a JSON object"});
    std::string name;
    if (!j.contains("experiment")) {
        errs.push_back("experiment: required (one of ray-knight, tanaka, gamma, valley-depth, "
                       "ladder, sandwich, localization, profile, simulate)");
    } else if (!j["experiment"].is_string()) {
        errs.push_back("experiment: expected a string");
    } else {
        name = j["experiment"].get<std::string>();
        const auto& names = experiment_names();
        if (std::find(names.begin(), names.end(), name) == names.end()) {
            errs.push_back("experiment: unknown experiment \"" + name + "\"");
            name.clear();
        }
    }
    ExperimentConfig c = defaults_for(name);
    const auto& table = setters();
    bool explicit_ci = false;
    for (const auto& [key, value] : j.items()) {
        if (key == "experiment") continue;
        auto it = table.find(key);
        if (it == table.end()) {
            errs.push_back("unknown key \"" + key + "\"");
            continue;
        }
        if (key == "c1" || key == "c2" || key == "c3") explicit_ci = true;
        it->second(c, value, errs);
    }
    if (c.c && explicit_ci) errs.push_back("c: cannot be combined with c1, c2 or c3");
    if (c.c) {
        if (!(*c.c > 0)) errs.push_back("c: must be > 0");
        const ValleyParams p = ValleyParams::from_c(1, *c.c);
        c.c1 = p.c1;
        c.c2 = p.c2;
        c.c3 = p.c3;
    }
    if (!name.empty()) validate(c, errs);
    if (!errs.empty()) throw ConfigError(errs);
    return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
    bool blank = text.find_first_not_of(" \t\r\n") == std::string::npos;
    if (blank) return parse_config(json::object());
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("not valid JSON: ") + e.what()});
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
    json j = {
        {"experiment", c.experiment},
        {"v_grid", c.v_grid},
        {"replicates", c.replicates},
        {"base_seed", c.base_seed},
        {"step", c.step},
        {"growth", c.growth},
        {"dt", c.dt},
        {"bin_width", c.bin_width},
        {"knot_budget", c.knot_budget},
        {"max_steps", c.max_steps},
        {"delta", c.delta},
        {"r_policy", c.r_policy},
        {"c0", c.c0},
        {"condition_on_gamma", c.condition_on_gamma},
        {"max_rejections", c.max_rejections},
        {"a", c.a},
        {"y_grid", c.y_grid},
        {"r", c.r},
        {"ceiling", c.ceiling},
        {"sup_replicates", c.sup_replicates},
        {"sup_dt", c.sup_dt},
        {"horizon_factor", c.horizon_factor},
        {"ks_threshold", c.ks_threshold},
        {"n_max", c.n_max},
        {"lambdas", c.lambdas},
        {"eta_lambdas", c.eta_lambdas},
        {"slack", c.slack},
        {"gamma_ceiling", c.gamma_ceiling},
        {"frequency_floor", c.frequency_floor},
        {"occupation_floor", c.occupation_floor},
        {"truncation_cap", c.truncation_cap},
        {"eps", c.eps},
        {"sigma_checks", c.sigma_checks},
        {"sigma_step_factor", c.sigma_step_factor},
        {"t", c.t},
        {"workers", c.workers},
        {"output", c.output},
    };
    if (c.c) {
        j["c"] = *c.c;
    } else {
        j["c1"] = c.c1;
        j["c2"] = c.c2;
        j["c3"] = c.c3;
    }
    return j;
}

json apply_overrides(json j, const std::vector<std::string>& overrides) {
    if (j.is_null()) j = json::object();
    Problems errs;
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) {
            errs.push_back("--set " + o + ": expected key=value");
            continue;
        }
        const std::string key = o.substr(0, eq), text = o.substr(eq + 1);
        json value = json::parse(text, nullptr, false);
        if (value.is_discarded()) value = text;
        // a scalar c replaces explicit c1..c3 and the other way round
        if (key == "c") {
            j.erase("c1");
            j.erase("c2");
            j.erase("c3");
        } else if (key == "c1" || key == "c2" || key == "c3") {
            j.erase("c");
        }
        j[key] = value;
    }
    if (!errs.empty()) throw ConfigError(errs);
    return j;
}

}  // namespace brox
