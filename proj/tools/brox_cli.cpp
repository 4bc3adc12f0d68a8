// Command-line front end: one subcommand per experiment plus two standalone tools.
//
// Exit codes: 0 pass, 1 a check failed, 2 configuration error, 3 truncation
// rate above the cap.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "brox/environment.hpp"
#include "brox/harness.hpp"
#include "brox/oracle.hpp"
#include "brox/path.hpp"
#include "brox/valley.hpp"

namespace {

using nlohmann::json;

enum Exit { ok = 0, failed = 1, config_error = 2, truncated = 3 };

struct Options {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
    std::size_t workers = 0;
    std::optional<std::uint64_t> seed;
    bool check = false;
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "JSON configuration file");
    sub->add_option("--set", o.sets, "key=value override, applied after the file (repeatable)");
    sub->add_option("--out", o.out, "output directory for the report");
    sub->add_option("--workers", o.workers, "replicate worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "base seed");
    sub->add_flag("--check", o.check, "validate and print the normalized configuration only");
}

int run(const std::string& experiment, const Options& o) {
    json j = json::object();
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) {
            std::cerr << "error: cannot read config file " << o.config << "\n";
            return config_error;
        }
        std::stringstream buf;
        buf << in.rdbuf();
        const std::string text = buf.str();
        if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
            j = json::parse(text, nullptr, false);
            if (j.is_discarded()) {
                std::cerr << "error: " << o.config << " is not valid JSON\n";
                return config_error;
            }
        }
        if (j.is_object() && j.contains("experiment") && j["experiment"] != experiment) {
            std::cerr << "error: config is for experiment " << j["experiment"].dump() << ", not \""
                      << experiment << "\"\n";
            return config_error;
        }
    }
    brox::ExperimentConfig cfg;
    try {
        j = brox::apply_overrides(std::move(j), o.sets);
        if (j.is_object() && !j.contains("experiment") && o.config.empty()) j["experiment"] = experiment;
        if (o.workers) j["workers"] = o.workers;
        if (o.seed) j["base_seed"] = *o.seed;
        if (!o.out.empty()) j["output"] = o.out;
        cfg = brox::parse_config(j);
    } catch (const brox::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return config_error;
    }
    if (o.check) {
        std::cout << brox::to_json(cfg).dump(2) << "\n";
        return ok;
    }
    const auto report = brox::run_experiment(cfg);
    const std::string path = brox::write_report(report, cfg, cfg.output);
    for (const auto& t : report.json["tests"])
        std::cout << (t["pass"].get<bool>() ? "PASS  " : "FAIL  ") << t["name"].get<std::string>() << "\n";
    const auto& tr = report.json["truncation"];
    std::cout << "truncated " << tr["truncated"] << "/" << tr["total"] << "\n";
    std::cout << "report " << path << "\n";
    if (report.truncation_exceeded) return truncated;
    return report.pass ? ok : failed;
}

int valley_tool(const std::string& path, double threshold, int count) {
    brox::SamplePath w;
    try {
        w = brox::read_path_csv(path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return config_error;
    }
    if (w.empty() || w.front() != 0 || w.value(0) != 0) {
        std::cerr << "error: the path must start at (0, 0)\n";
        return config_error;
    }
    try {
        brox::Environment env = brox::Environment::fixed(w, brox::SamplePath{{0, 0}, {1, 0}});
        const auto seq = brox::valley_sequence(env, brox::Side::right, threshold, count);
        json valleys = json::array();
        for (const auto& s : seq.steps) valleys.push_back({{"b", s.b}, {"m", s.m}});
        std::cout << json{{"threshold", threshold}, {"count", count}, {"valleys", valleys},
                          {"truncated", seq.truncated}}
                         .dump(2)
                  << "\n";
    } catch (const brox::InvalidConfig& e) {
        std::cerr << "error: " << e.what() << "\n";
        return config_error;
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diffusion in a Brownian environment: simulation and checks"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* experiment;
        const char* help;
    };
    const Sub subs[] = {
        {"simulate", "simulate", "simulate one realization and export its local time"},
        {"gamma", "gamma", "probability of the good-environment events"},
        {"ray-knight", "ray-knight", "local-time laws of Brownian motion"},
        {"tanaka", "tanaka", "law of the valley around its bottom"},
        {"ladder", "ladder", "successive valley heights and integrals"},
        {"sandwich", "sandwich", "bounds on the local-time supremum at time e^v"},
        {"localization", "localization", "occupation of the four valley windows"},
        {"profile", "profile", "local-time profile events at sigma_v"},
    };
    std::vector<Options> opts(std::size(subs));
    std::vector<CLI::App*> cmds;
    for (std::size_t i = 0; i < std::size(subs); ++i) {
        cmds.push_back(app.add_subcommand(subs[i].name, subs[i].help));
        add_common(cmds.back(), opts[i]);
    }

    Options valley_opts;
    std::string path;
    double threshold = 0;
    int count = 3;
    auto* valley = app.add_subcommand("valley", "valley points of a path, or the valley-depth experiment");
    add_common(valley, valley_opts);
    valley->add_option("--path", path, "CSV path (position,value) starting at (0, 0)");
    valley->add_option("--threshold", threshold, "depth threshold");
    valley->add_option("--count", count, "number of valleys");

    auto* j0 = app.add_subcommand("j0", "print the first positive zero of J0");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*j0) {
            std::printf("%.15f\n", brox::j0_constant());
            return ok;
        }
        if (*valley) {
            if (!path.empty()) return valley_tool(path, threshold, count);
            return run("valley-depth", valley_opts);
        }
        for (std::size_t i = 0; i < cmds.size(); ++i)
            if (*cmds[i]) return run(subs[i].experiment, opts[i]);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failed;
    }
    return config_error;
}
