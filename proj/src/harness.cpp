#include "brox/harness.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "brox/diffusion.hpp"
#include "brox/environment.hpp"
#include "brox/oracle.hpp"
#include "brox/sampling.hpp"

namespace brox {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string vlabel(double v) { return "v" + num(v) + ":"; }

struct Truncation {
    std::size_t total = 0;
    std::size_t truncated = 0;
    std::map<std::string, std::size_t> reasons;

    void add(bool t, const std::string& reason = {}) {
        ++total;
        if (t) {
            ++truncated;
            ++reasons[reason.empty() ? "unspecified" : reason];
        }
    }
    double rate() const { return total ? double(truncated) / double(total) : 0.0; }
};

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string str() const {
        std::ostringstream out;
        for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
        out << "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
            out << "\n";
        }
        return out.str();
    }
};

class Report {
public:
    explicit Report(const ExperimentConfig& c) : c_(c), start_(Clock::now()) {}

    void test(const std::string& name, bool pass, json detail = json::object()) {
        detail["name"] = name;
        detail["pass"] = pass;
        tests_.push_back(std::move(detail));
        pass_ = pass_ && pass;
    }
    void test(const std::string& name, const TestResult& r) { test(name, r.pass, to_json(r)); }

    void stream(const std::string& label) { streams_.push_back(label); }

    json& results() { return results_; }
    Truncation& truncation() { return trunc_; }
    Csv& csv() { return csv_; }

    ExperimentReport finish() {
        ExperimentReport out;
        const bool exceeded = trunc_.rate() > c_.truncation_cap;
        json t = {{"total", trunc_.total},
                  {"truncated", trunc_.truncated},
                  {"rate", trunc_.rate()},
                  {"cap", c_.truncation_cap},
                  {"exceeded", exceeded},
                  {"reasons", trunc_.reasons}};
        json seeds = {{"base_seed", c_.base_seed},
                      {"replicates", c_.replicates},
                      {"derivation", "derive_seed(base_seed, replicate, label)"},
                      {"streams", streams_}};
        out.json = {{"experiment", c_.experiment},
                    {"config", to_json(c_)},
                    {"results", results_},
                    {"tests", tests_},
                    {"truncation", t},
                    {"seed_ledger", seeds},
                    {"pass", pass_ && !exceeded},
                    {"wall_time", std::chrono::duration<double>(Clock::now() - start_).count()}};
        out.csv = csv_.str();
        out.pass = pass_ && !exceeded;
        out.truncation_exceeded = exceeded;
        return out;
    }

private:
    const ExperimentConfig& c_;
    Clock::time_point start_;
    json results_ = json::object();
    json tests_ = json::array();
    std::vector<std::string> streams_;
    Truncation trunc_;
    Csv csv_;
    bool pass_ = true;
};

// KS helpers that turn a too-small sample into a failed result instead of an exception.
TestResult guarded(const std::function<TestResult()>& run, const std::string& tag) {
    try {
        return run();
    } catch (const InsufficientData& e) {
        TestResult r;
        r.law_tag = tag + " (" + e.what() + ")";
        return r;
    }
}

EnvironmentConfig env_config(const ExperimentConfig& c, std::uint64_t seed) {
    EnvironmentConfig e;
    e.step = c.step;
    e.growth = c.growth;
    e.seed = seed;
    e.initial_horizon = 5;
    e.knot_budget = c.knot_budget;
    return e;
}

// --- Environments conditioned on the good-environment event ----------------

struct Prepared {
    std::optional<Environment> env;
    ValleyDecomposition right;
    ValleyDecomposition left;
    std::size_t rejections = 0;
    std::string failure;  // empty on success
};

bool complete(const ValleyDecomposition& d) { return !d.minus.empty() && d.plus.has_value(); }

Prepared prepare_environment(const ExperimentConfig& c, const ValleyParams& p, std::size_t rep,
                             const std::string& prefix) {
    Prepared out;
    const std::size_t attempts = c.condition_on_gamma ? c.max_rejections + 1 : 1;
    for (std::size_t k = 0; k < attempts; ++k) {
        const auto seed = derive_seed(c.base_seed, rep, prefix + "env:" + std::to_string(k));
        Environment env = Environment::brownian(env_config(c, seed));
        auto right = decompose(env, Side::right, p, 3);
        auto left = decompose(env, Side::left, p, 3);
        bool accept = complete(right) && complete(left);
        if (accept && c.condition_on_gamma) {
            const auto g = gamma_events(env, right, left, p);
            accept = g.gamma.value_or(false);
        }
        if (accept) {
            out.env.emplace(std::move(env));
            out.right = std::move(right);
            out.left = std::move(left);
            return out;
        }
        if (c.condition_on_gamma) ++out.rejections;
    }
    out.failure = c.condition_on_gamma ? "conditioning" : "decomposition";
    return out;
}

struct Integrals {
    double parts[4] = {0, 0, 0, 0};  // m-, m+, hat m-, hat m+
    double i = 0;
    double I = 0;
};

Integrals valley_integrals(Environment& env, const ValleyDecomposition& r, const ValleyDecomposition& l) {
    Integrals out;
    out.parts[0] = exp_integral(env, Side::right, r.minus[0].a, r.minus[0].b, r.minus[0].m).value;
    out.parts[1] = exp_integral(env, Side::right, r.plus->a, r.plus->b, r.plus->m).value;
    out.parts[2] = exp_integral(env, Side::left, l.minus[0].a, l.minus[0].b, l.minus[0].m).value;
    out.parts[3] = exp_integral(env, Side::left, l.plus->a, l.plus->b, l.plus->m).value;
    out.i = *std::min_element(out.parts, out.parts + 4);
    out.I = out.parts[0] + out.parts[1] + out.parts[2] + out.parts[3];
    return out;
}

double slack_term(double v, double delta) { return 2 * std::pow(v, 6) * delta; }

double r_for(const ExperimentConfig& c, const Integrals& in, double v) {
    if (c.r_policy == "i_v") return 1 / (in.i * (1 - c.delta));
    if (c.r_policy == "I_v") return 1 / (in.I + slack_term(v, c.delta));
    return c.r;
}

DriverConfig driver_config(const ExperimentConfig& c, std::uint64_t seed, double v, bool sigma_run) {
    DriverConfig d;
    d.dt = c.dt;
    d.seed = seed;
    d.max_steps = c.max_steps;
    if (sigma_run) {
        const double cap = std::ceil(c.sigma_step_factor * std::exp(v) / c.dt);
        if (cap < static_cast<double>(d.max_steps)) d.max_steps = static_cast<std::size_t>(cap);
    }
    return d;
}

bool nondecreasing(const std::vector<double>& xs) {
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (xs[i] < xs[i - 1]) return false;
    return true;
}

// --- Ray-Knight walks -------------------------------------------------------

// Time the linear segment x0 -> x1 of duration dt spends in [lo, hi).
double segment_time(double x0, double x1, double dt, double lo, double hi) {
    if (x0 == x1) return (x0 >= lo && x0 < hi) ? dt : 0.0;
    const double a = std::min(x0, x1), b = std::max(x0, x1);
    const double overlap = std::max(0.0, std::min(b, hi) - std::max(a, lo));
    return dt * overlap / (b - a);
}

struct RkOne {
    std::vector<double> local;  // per y
    double top = 0;
    bool truncated = false;
};

// Brownian motion reflected at 0 (|B_k + xi|) up to its first passage at a;
// local times at levels >= 0 have the law of those of B.
RkOne ray_knight_first(const ExperimentConfig& c, std::size_t rep) {
    Rng rng(derive_seed(c.base_seed, rep, "rk1"));
    std::normal_distribution<double> normal;
    const double sd = std::sqrt(c.step), bw = c.bin_width;
    RkOne out;
    std::vector<double> occ(c.y_grid.size(), 0.0);
    double top = 0, x = 0;
    auto add = [&](double x0, double x1, double dt) {
        for (std::size_t k = 0; k < c.y_grid.size(); ++k) {
            const double level = c.a - c.y_grid[k];
            occ[k] += segment_time(x0, x1, dt, level - bw / 2, level + bw / 2);
        }
        top += segment_time(x0, x1, dt, c.a - bw / 2, c.a + bw / 2);
    };
    std::size_t steps = 0;
    for (;; ++steps) {
        if (steps >= c.max_steps) {
            out.truncated = true;
            break;
        }
        const double x1 = std::abs(x + sd * normal(rng));
        if (x1 >= c.a) {
            const double u = (c.a - x) / (x1 - x);
            add(x, c.a, u * c.step);
            break;
        }
        add(x, x1, c.step);
        x = x1;
    }
    for (double o : occ) out.local.push_back(o / bw);
    out.top = top / bw;
    return out;
}

struct RkTwo {
    std::vector<double> local;
    double at_zero = 0;
    bool truncated = false;
};

// E[density at 0+ gained by a reflected Brownian step x -> z over dt]. The
// reflected endpoint z comes from W = +z or W = -z with weights phi(z - x),
// phi(z + x); for either, the bridge local time at 0 has expectation
// e^{d^2 / 2dt} sqrt(2 pi dt) Q((x + z) / sqrt(dt)), and the density of |W|
// at 0+ is twice the local time of W at 0.
double reflected_zero_density(double x, double z, double dt) {
    const double sd = std::sqrt(dt), s = x + z;
    if (s > 12 * sd) return 0.0;
    const double q = 0.5 * std::erfc(s / (sd * std::sqrt(2.0)));
    const double norm = 1 / std::sqrt(2 * std::numbers::pi * dt);
    const double phi = norm * (std::exp(-(z - x) * (z - x) / (2 * dt)) + std::exp(-s * s / (2 * dt)));
    return 4 * q / phi;
}

// Walk reflected at 0 and at the ceiling, run until its local time at 0
// reaches r. Levels below the ceiling keep the local-time law of the free
// motion with its negative excursions removed.
RkTwo ray_knight_second(const ExperimentConfig& c, std::size_t rep) {
    Rng rng(derive_seed(c.base_seed, rep, "rk2"));
    std::normal_distribution<double> normal;
    const double sd = std::sqrt(c.step), bw = c.bin_width, H = c.ceiling;
    RkTwo out;
    std::vector<double> occ(c.y_grid.size(), 0.0);
    double zero = 0, x = 0;
    auto add = [&](double x0, double x1, double dt) {
        for (std::size_t k = 0; k < c.y_grid.size(); ++k)
            occ[k] += segment_time(x0, x1, dt, c.y_grid[k] - bw / 2, c.y_grid[k] + bw / 2);
    };
    for (std::size_t steps = 0;; ++steps) {
        if (steps >= c.max_steps) {
            out.truncated = true;
            break;
        }
        double x1 = x + sd * normal(rng);
        while (x1 < 0 || x1 > H) x1 = x1 < 0 ? -x1 : 2 * H - x1;
        const double gain = reflected_zero_density(x, x1, c.step);
        if (zero + gain >= c.r) {
            const double u = (c.r - zero) / gain;
            add(x, x + (x1 - x) * u, u * c.step);
            zero = c.r;
            break;
        }
        add(x, x1, c.step);
        zero += gain;
        x = x1;
    }
    for (double o : occ) out.local.push_back(o / bw);
    out.at_zero = zero;
    return out;
}

// Whether a 0-dimensional squared Bessel process from 1 reaches 2 before 0.
// Exact transitions on a grid; a crossing between two grid values below 2 is
// drawn with the Brownian-bridge probability exp(-2 d0 d1 / (s^2 dt)), where
// s^2 = 4 * 2 is the squared diffusion coefficient at level 2.
std::optional<bool> sup_reaches_two(const ExperimentConfig& c, std::size_t rep) {
    Rng rng(derive_seed(c.base_seed, rep, "sup"));
    std::uniform_real_distribution<double> unif;
    const double dt = c.sup_dt;
    double z = 1;
    for (std::size_t steps = 0; steps < c.max_steps; ++steps) {
        const double z1 = sq_bessel0_transition(z, dt, rng);
        if (z1 >= 2) return true;
        if (z1 <= 0) return false;
        const double p = std::exp(-2 * (2 - z) * (2 - z1) / (8 * dt));
        if (unif(rng) < p) return true;
        z = z1;
    }
    return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentReport run_ray_knight(const ExperimentConfig& c) {
    Report rep(c);
    rep.stream("rk1");
    rep.stream("rk2");
    rep.stream("rk2_reference:y=<y>");
    rep.stream("sup");
    const std::size_t n = c.replicates, ny = c.y_grid.size();

    const auto first = parallel_replicates<RkOne>(n, c.workers, [&](std::size_t i) {
        return ray_knight_first(c, i);
    });
    const auto second = parallel_replicates<RkTwo>(n, c.workers, [&](std::size_t i) {
        return ray_knight_second(c, i);
    });
    const auto sups = parallel_replicates<std::optional<bool>>(
        c.sup_replicates, c.workers, [&](std::size_t i) { return sup_reaches_two(c, i); });

    std::vector<std::vector<double>> l1(ny), l2(ny), ref(ny);
    std::vector<double> tops, zeros;
    for (const auto& r : first) {
        rep.truncation().add(r.truncated, "rk1 step budget");
        if (r.truncated) continue;
        for (std::size_t k = 0; k < ny; ++k) l1[k].push_back(r.local[k]);
        tops.push_back(r.top);
    }
    for (const auto& r : second) {
        rep.truncation().add(r.truncated, "rk2 step budget");
        if (r.truncated) continue;
        for (std::size_t k = 0; k < ny; ++k) l2[k].push_back(r.local[k]);
        zeros.push_back(r.at_zero);
    }
    for (std::size_t k = 0; k < ny; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            Rng rng(derive_seed(c.base_seed, i, "rk2_reference:y=" + num(c.y_grid[k])));
            ref[k].push_back(sq_bessel0_transition(c.r, c.y_grid[k], rng));
        }
    }

    auto mean = [](const std::vector<double>& xs) {
        return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    };
    auto variance = [&](const std::vector<double>& xs) {
        if (xs.size() < 2) return 0.0;
        const double m = mean(xs);
        double s = 0;
        for (double x : xs) s += (x - m) * (x - m);
        return s / (xs.size() - 1);
    };

    rep.csv().header = {"part", "y", "level", "n", "mean", "expected_mean", "ks_statistic",
                        "ks_threshold", "pass"};
    json first_json = json::array(), second_json = json::array();
    for (std::size_t k = 0; k < ny; ++k) {
        const double y = c.y_grid[k];
        const auto law = LawSpec::exponential(2 * y);
        const auto t1 = guarded([&] { return ks_test(l1[k], law, Alpha::p01); }, law.tag());
        rep.test("first: L(tau(a), a - y) ~ Exp(2y) at y=" + num(y), t1);
        first_json.push_back({{"y", y}, {"level", c.a - y}, {"mean", mean(l1[k])}, {"expected_mean", 2 * y},
                              {"ks", to_json(t1)}});
        rep.csv().rows.push_back({"first", num(y), num(c.a - y), std::to_string(l1[k].size()),
                                  num(mean(l1[k])), num(2 * y), num(t1.statistic), num(t1.threshold),
                                  t1.pass ? "1" : "0"});

        const auto t2 = guarded(
            [&] { return ks_two_sample(l2[k], ref[k], Alpha::p01, "sq_bessel0(r, y) reference"); },
            "sq_bessel0 reference");
        rep.test("second: L(sigma(r, 0), y) vs sq_bessel0 marginal at y=" + num(y), t2);
        second_json.push_back({{"y", y}, {"mean", mean(l2[k])}, {"expected_mean", c.r},
                               {"reference_mean", mean(ref[k])}, {"ks", to_json(t2)}});
        rep.csv().rows.push_back({"second", num(y), num(y), std::to_string(l2[k].size()),
                                  num(mean(l2[k])), num(c.r), num(t2.statistic), num(t2.threshold),
                                  t2.pass ? "1" : "0"});
    }
    const double top_mean = mean(tops);
    rep.test("first: local time at the top level a is near 0", top_mean < 2 * c.bin_width,
             {{"mean", top_mean}, {"bound", 2 * c.bin_width}});
    const double zero_var = variance(zeros);
    rep.test("second: local time at 0 equals r", zero_var < c.bin_width && std::abs(mean(zeros) - c.r) < c.bin_width,
             {{"mean", mean(zeros)}, {"variance", zero_var}, {"bound", c.bin_width}});

    std::size_t hits = 0, decided = 0;
    for (const auto& s : sups) {
        rep.truncation().add(!s.has_value(), "sup step budget");
        if (s) {
            ++decided;
            hits += *s;
        }
    }
    const Frequency f = wilson(hits, decided);
    const bool sup_ok = f.freq >= 0.49 && f.freq <= 0.51;
    rep.test("sq_bessel0 from 1: P(sup >= 2) in [0.49, 0.51]", sup_ok,
             {{"frequency", to_json(f)}, {"expected", 0.5}, {"interval", {0.49, 0.51}}});
    rep.csv().rows.push_back({"sup", "", "2", std::to_string(decided), num(f.freq), "0.5", "", "", sup_ok ? "1" : "0"});

    rep.results() = {{"first", first_json},
                     {"second", second_json},
                     {"top_level_mean", top_mean},
                     {"zero_level", {{"mean", mean(zeros)}, {"variance", zero_var}}},
                     {"sup_at_least_two", to_json(f)}};
    return rep.finish();
}

// ---------------------------------------------------------------------------

ExperimentReport run_tanaka(const ExperimentConfig& c) {
    Report rep(c);
    json per_v = json::array();
    rep.csv().header = {"v", "n", "forward_ks", "backward_ks", "threshold", "correlation",
                        "correlation_bound", "pass"};
    for (double v : c.v_grid) {
        const std::string pre = vlabel(v);
        rep.stream(pre + "env");
        rep.stream(pre + "bessel3");
        rep.stream(pre + "bessel3_tail");
        struct Row {
            bool truncated = false;
            std::string reason;
            double forward = 0, backward = 0, tau = 0, rho = 0, endpoint_error = 0;
        };
        const auto rows = parallel_replicates<Row>(c.replicates, c.workers, [&](std::size_t i) {
            Row row;
            Environment env = Environment::brownian(env_config(c, derive_seed(c.base_seed, i, pre + "env")));
            const auto seq = valley_sequence(env, Side::right, v, 1);
            if (seq.steps.empty()) {
                row.truncated = true;
                row.reason = "environment budget";
                return row;
            }
            const double h = seq.steps[0].b, m = seq.steps[0].m;
            row.forward = h - m;
            row.backward = m;
            const SamplePath& w = env.side(Side::right);
            row.endpoint_error = std::abs(w.at(h) - w.at(m) - v);
            const SamplerConfig sc{c.step, derive_seed(c.base_seed, i, pre + "bessel3"),
                                   c.horizon_factor * v * v, 0.0};
            const SamplePath bes = sample_bessel(BesselKind::bessel3, 0.0, sc);
            Rng tail(derive_seed(c.base_seed, i, pre + "bessel3_tail"));
            const double tail_inf = bes.value(bes.size() - 1) * std::uniform_real_distribution<double>()(tail);
            const auto f = bessel_functionals(bes, v, tail_inf);
            if (!f.tau || !f.rho) {
                row.truncated = true;
                row.reason = "bessel horizon";
                return row;
            }
            row.tau = *f.tau;
            row.rho = *f.rho;
            return row;
        });
        std::vector<double> fwd, bwd, tau, rho;
        double worst_endpoint = 0;
        for (const auto& r : rows) {
            rep.truncation().add(r.truncated, r.reason);
            if (r.truncated) continue;
            fwd.push_back(r.forward);
            bwd.push_back(r.backward);
            tau.push_back(r.tau);
            rho.push_back(r.rho);
            worst_endpoint = std::max(worst_endpoint, r.endpoint_error);
        }
        const auto tf = guarded([&] { return ks_two_sample_fixed(fwd, tau, c.ks_threshold, "tau_R(v) of BES3"); },
                                "tau_R(v)");
        const auto tb = guarded([&] { return ks_two_sample_fixed(bwd, rho, c.ks_threshold, "rho_R(v) of BES3"); },
                                "rho_R(v)");
        const double corr = fwd.size() >= 2 ? pearson_correlation(fwd, bwd) : 0.0;
        const double bound = 3 / std::sqrt(static_cast<double>(std::max<std::size_t>(fwd.size(), 1)));
        rep.test("H_v - m_v vs tau_R(v) at v=" + num(v), tf);
        rep.test("m_v vs rho_R(v) at v=" + num(v), tb);
        rep.test("forward and backward pieces uncorrelated at v=" + num(v), std::abs(corr) < bound,
                 {{"correlation", corr}, {"bound", bound}});
        rep.test("forward piece ends at height v at v=" + num(v), worst_endpoint <= 1e-9 * std::max(1.0, v),
                 {{"worst_error", worst_endpoint}});
        per_v.push_back({{"v", v},
                         {"n", fwd.size()},
                         {"forward_vs_tau", to_json(tf)},
                         {"backward_vs_rho", to_json(tb)},
                         {"correlation", corr},
                         {"correlation_bound", bound},
                         {"endpoint_worst_error", worst_endpoint}});
        rep.csv().rows.push_back({num(v), std::to_string(fwd.size()), num(tf.statistic), num(tb.statistic),
                                  num(c.ks_threshold), num(corr), num(bound),
                                  (tf.pass && tb.pass && std::abs(corr) < bound) ? "1" : "0"});
    }
    rep.results() = {{"per_v", per_v}};
    return rep.finish();
}

// ---------------------------------------------------------------------------

ExperimentReport run_gamma_probability(const ExperimentConfig& c) {
    Report rep(c);
    rep.stream("env");
    struct Row {
        std::vector<Verdict> gamma, gamma_prime;
        std::vector<std::vector<std::string>> failed;
        std::vector<bool> implication;  // G3 => G1 on both sides, clause-wise
    };
    const std::size_t nv = c.v_grid.size();
    const auto rows = parallel_replicates<Row>(c.replicates, c.workers, [&](std::size_t i) {
        // common random numbers: one environment per replicate for all v
        Environment env = Environment::brownian(env_config(c, derive_seed(c.base_seed, i, "env")));
        Row row;
        for (double v : c.v_grid) {
            const auto g = gamma_events(env, c.params(v));
            row.gamma.push_back(g.gamma);
            row.gamma_prime.push_back(g.gamma_prime);
            row.failed.push_back(g.failed_clauses());
            auto implies = [](const SideGamma& s) {
                const Verdict g3 = s.g3(), g1 = s.g1();
                return !(g3.value_or(false) && !g1.value_or(true));
            };
            row.implication.push_back(implies(g.right) && implies(g.left));
        }
        return row;
    });

    json per_v = json::array();
    std::vector<double> fail_freq;
    rep.csv().header = {"v", "n", "indeterminate", "fail_gamma", "freq_fail_gamma", "lo", "hi",
                        "fail_gamma_prime", "freq_fail_gamma_prime", "implication_rate"};
    bool all_implication = true;
    for (std::size_t k = 0; k < nv; ++k) {
        std::size_t indet = 0, fails = 0, fails_prime = 0, determinate = 0, determinate_prime = 0, impl = 0;
        std::map<std::string, std::size_t> first_failed, any_failed;
        for (const auto& r : rows) {
            impl += r.implication[k];
            if (r.gamma_prime[k]) {
                ++determinate_prime;
                fails_prime += !*r.gamma_prime[k];
            }
            if (!r.gamma[k]) {
                ++indet;
                continue;
            }
            ++determinate;
            if (!*r.gamma[k]) {
                ++fails;
                const auto& f = r.failed[k];
                ++first_failed[f.empty() ? "none" : f.front()];
                for (const auto& name : f) ++any_failed[name];
            }
        }
        const Frequency f = wilson(fails, determinate), fp = wilson(fails_prime, determinate_prime);
        fail_freq.push_back(f.freq);
        std::size_t attributed = 0;
        for (const auto& [_, cnt] : first_failed) attributed += cnt;
        rep.test("clause attribution sums to failures at v=" + num(c.v_grid[k]), attributed == fails,
                 {{"attributed", attributed}, {"failures", fails}});
        const double impl_rate = double(impl) / double(rows.size());
        all_implication = all_implication && impl == rows.size();
        per_v.push_back({{"v", c.v_grid[k]},
                         {"params", {{"c1", c.params(c.v_grid[k]).c1},
                                     {"c2", c.params(c.v_grid[k]).c2},
                                     {"c3", c.params(c.v_grid[k]).c3}}},
                         {"n", rows.size()},
                         {"indeterminate", indet},
                         {"not_gamma", to_json(f)},
                         {"not_gamma_prime", to_json(fp)},
                         {"first_failed_clause", first_failed},
                         {"failed_clause_counts", any_failed},
                         {"g3_implies_g1_rate", impl_rate}});
        rep.csv().rows.push_back({num(c.v_grid[k]), std::to_string(rows.size()), std::to_string(indet),
                                  std::to_string(fails), num(f.freq), num(f.lo), num(f.hi),
                                  std::to_string(fails_prime), num(fp.freq), num(impl_rate)});
        for (std::size_t i = 0; i < indet; ++i) rep.truncation().add(true, "indeterminate gamma");
        for (std::size_t i = 0; i < determinate; ++i) rep.truncation().add(false);
    }
    bool decreasing = true;
    for (std::size_t k = 1; k < fail_freq.size(); ++k) decreasing = decreasing && fail_freq[k] < fail_freq[k - 1];
    rep.test("P(not gamma) strictly decreasing along v_grid", decreasing, {{"frequencies", fail_freq}});
    rep.test("P(not gamma) at the largest v below the ceiling", fail_freq.back() <= c.gamma_ceiling,
             {{"frequency", fail_freq.back()}, {"ceiling", c.gamma_ceiling}});
    rep.test("G3 implies G1 clause-wise in every replicate", all_implication);
    rep.results() = {{"per_v", per_v}};
    return rep.finish();
}

// ---------------------------------------------------------------------------

ExperimentReport run_valley_depth(const ExperimentConfig& c) {
    Report rep(c);
    json per_v = json::array();
    rep.csv().header = {"v", "depth_threshold", "n", "mean", "ks_statistic", "ks_threshold", "pass"};
    for (double v : c.v_grid) {
        const std::string pre = vlabel(v);
        rep.stream(pre + "env");
        const ValleyParams p = c.params(v);
        const auto rows = parallel_replicates<std::optional<double>>(c.replicates, c.workers, [&](std::size_t i) {
            Environment env = Environment::brownian(env_config(c, derive_seed(c.base_seed, i, pre + "env")));
            const auto seq = valley_sequence(env, Side::right, p.depth(), 1);
            if (seq.steps.empty()) return std::optional<double>{};
            return std::optional<double>{-env.side(Side::right).at(seq.steps[0].m)};
        });
        std::vector<double> depth;
        for (const auto& r : rows) {
            rep.truncation().add(!r, "environment budget");
            if (r) depth.push_back(*r);
        }
        const auto law = LawSpec::exponential(p.depth());
        const auto t = guarded([&] { return ks_test(depth, law, Alpha::p01); }, law.tag());
        rep.test("-W(m-_1) ~ Exp(v - c1 log v) at v=" + num(v), t);
        const double mean = depth.empty() ? 0 : std::accumulate(depth.begin(), depth.end(), 0.0) / depth.size();
        per_v.push_back({{"v", v}, {"depth_threshold", p.depth()}, {"n", depth.size()}, {"mean", mean},
                         {"ks", to_json(t)}});
        rep.csv().rows.push_back({num(v), num(p.depth()), std::to_string(depth.size()), num(mean),
                                  num(t.statistic), num(t.threshold), t.pass ? "1" : "0"});
    }
    rep.results() = {{"per_v", per_v}};
    return rep.finish();
}

// ---------------------------------------------------------------------------

ExperimentReport run_ladder_stats(const ExperimentConfig& c) {
    Report rep(c);
    rep.stream("env");
    rep.stream("eta_reference");
    // Integrals are only pooled where the environment grid is still uniform.
    const double uniform_limit = c.growth > 0 ? c.step / c.growth : std::numeric_limits<double>::infinity();
    struct Row {
        bool short_ladder = false;
        std::vector<double> log_ratio, ridge, eta;
        bool monotone = true;
        std::optional<double> reference;
    };
    const auto rows = parallel_replicates<Row>(c.replicates, c.workers, [&](std::size_t i) {
        Row row;
        Environment env = Environment::brownian(env_config(c, derive_seed(c.base_seed, i, "env")));
        const auto lad = ladder_sequence(env, Side::right, c.n_max);
        if (lad.n() < c.n_max) {
            row.short_ladder = true;
        } else {
            for (int n = 1; n <= lad.n(); ++n) {
                const auto& prev = lad.rungs[n - 1];
                const auto& r = lad.rungs[n];
                row.log_ratio.push_back(std::log(r.height / prev.height));
                row.monotone = row.monotone && r.height >= prev.height;
                if (r.top <= uniform_limit)
                    row.ridge.push_back(exp_integral(env, Side::right, prev.gamma, r.top, r.mu).value);
                if (r.eta <= uniform_limit)
                    row.eta.push_back(exp_integral(env, Side::right, r.mu, r.eta, r.mu).value);
            }
        }
        // BES3 from 0 up to its first passage at 2, same grid step
        const SamplerConfig sc{c.step, derive_seed(c.base_seed, i, "eta_reference"), 40.0, 0.0};
        const SamplePath bes = sample_bessel(BesselKind::bessel3, 0.0, sc);
        if (auto hit = hitting_time(bes, 2.0, 0.0)) row.reference = exp_integral(bes, 0.0, *hit, 0.0).value;
        return row;
    });

    std::vector<double> ratios, ridge, eta, reference;
    std::size_t monotone = 0, complete_ladders = 0;
    for (const auto& r : rows) {
        rep.truncation().add(r.short_ladder, "short ladder");
        if (!r.short_ladder) {
            ++complete_ladders;
            monotone += r.monotone;
            ratios.insert(ratios.end(), r.log_ratio.begin(), r.log_ratio.end());
            ridge.insert(ridge.end(), r.ridge.begin(), r.ridge.end());
            eta.insert(eta.end(), r.eta.begin(), r.eta.end());
        }
        if (r.reference) reference.push_back(*r.reference);
    }
    const auto law = LawSpec::exponential(1.0);
    const auto tr = guarded([&] { return ks_test(ratios, law, Alpha::p01); }, law.tag());
    rep.test("log(h_{n+1} / h_n) ~ Exp(1), pooled", tr);
    rep.test("h_n nondecreasing in every ladder", monotone == complete_ladders,
             {{"monotone", monotone}, {"ladders", complete_ladders}});

    rep.csv().header = {"quantity", "lambda", "n", "empirical", "envelope", "pass"};
    json ridge_json = json::array(), eta_json = json::array();
    for (double l : c.lambdas) {
        const Frequency f = tail_frequency(ridge, l);
        const double env = ridge_integral_tail_upper(l, c.slack);
        rep.test("P(ridge integral >= " + num(l) + ") within the envelope", f.freq <= env,
                 {{"frequency", to_json(f)}, {"envelope", env}});
        ridge_json.push_back({{"lambda", l}, {"frequency", to_json(f)}, {"envelope", env}});
        rep.csv().rows.push_back({"ridge_upper_tail", num(l), std::to_string(f.n), num(f.freq), num(env),
                                  f.freq <= env ? "1" : "0"});
    }
    for (double l : c.eta_lambdas) {
        std::size_t below = 0;
        for (double x : eta) below += x <= l;
        const Frequency f = wilson(below, eta.size());
        const double env = eta_integral_lower_tail_upper(l, c.slack);
        rep.test("P(eta integral <= " + num(l) + ") within the envelope", f.freq <= env,
                 {{"frequency", to_json(f)}, {"envelope", env}});
        eta_json.push_back({{"lambda", l}, {"frequency", to_json(f)}, {"envelope", env}});
        rep.csv().rows.push_back({"eta_lower_tail", num(l), std::to_string(f.n), num(f.freq), num(env),
                                  f.freq <= env ? "1" : "0"});
    }
    const auto te = guarded(
        [&] { return ks_two_sample(eta, reference, Alpha::p01, "int_0^{T_R(2)} e^{-R}, BES3 from 0"); },
        "eta reference");
    rep.test("eta integral vs its BES3 law", te);

    rep.results() = {{"log_ratio", {{"n_pooled", ratios.size()}, {"ks", to_json(tr)}}},
                     {"ridge_integral", {{"n_pooled", ridge.size()}, {"tails", ridge_json}}},
                     {"eta_integral", {{"n_pooled", eta.size()}, {"tails", eta_json}, {"ks_vs_bessel3", to_json(te)}}},
                     {"uniform_grid_limit", std::isfinite(uniform_limit) ? json(uniform_limit) : json(nullptr)},
                     {"complete_ladders", complete_ladders}};
    return rep.finish();
}

// ---------------------------------------------------------------------------

ExperimentReport run_sandwich(const ExperimentConfig& c) {
    Report rep(c);
    struct Row {
        std::string truncated;  // reason, empty if kept
        std::size_t rejections = 0;
        double lstar = 0, lower = 0, lower_raw = 0, upper = 0, i = 0, I = 0, r = 0;
        bool held = false, held_raw = false;
        bool sigma_reached = false;
        double sigma = 0, lsig = 0, outside = 0;
        std::string sigma_label;
        bool level_ok = false, time_ok = false, occupation_ok = false, definitional = false;
    };
    json per_v = json::array();
    std::vector<double> freqs;
    rep.csv().header = {"v", "n", "truncated", "held", "freq", "lo", "hi", "freq_raw", "sigma_reached",
                        "freq_level", "freq_time", "freq_occupation", "mean_rejections"};
    bool definitional_all = true;
    for (double v : c.v_grid) {
        const std::string pre = vlabel(v);
        rep.stream(pre + "env:<attempt>");
        rep.stream(pre + "driver");
        const ValleyParams p = c.params(v);
        const auto rows = parallel_replicates<Row>(c.replicates, c.workers, [&](std::size_t i) {
            Row row;
            Prepared prep = prepare_environment(c, p, i, pre);
            row.rejections = prep.rejections;
            if (!prep.failure.empty()) {
                row.truncated = prep.failure;
                return row;
            }
            const Integrals in = valley_integrals(*prep.env, prep.right, prep.left);
            const auto sets = merge_intervals(
                localization_sets(*prep.env, prep.right, prep.left, v, c.delta, WidthMode::valley, c.eps));
            DiffusionRealization real(std::move(*prep.env),
                                      driver_config(c, derive_seed(c.base_seed, i, pre + "driver"), v, c.sigma_checks));
            const double t = std::exp(v);
            if (!real.advance_to_time(t)) {
                row.truncated = "step budget";
                return row;
            }
            row.i = in.i;
            row.I = in.I;
            row.lstar = real.local_time_field(t, c.bin_width, Estimator::direct).sup();
            row.lower_raw = t / in.I;
            row.lower = t / (in.I + slack_term(v, c.delta));
            row.upper = t * (1 + c.delta) / (in.i * (1 - c.delta));
            row.held = row.lower <= row.lstar && row.lstar <= row.upper;
            row.held_raw = row.lower_raw <= row.lstar && row.lstar <= row.upper;
            if (c.sigma_checks) {
                row.r = r_for(c, in, v);
                const auto s = composite_sigma(real, prep.right, prep.left, row.r, v, c.bin_width);
                if (s) {
                    const double level = row.r * t;
                    row.sigma_reached = true;
                    row.sigma = s->sigma;
                    row.sigma_label = s->label;
                    row.lsig = real.local_time_field(s->sigma, c.bin_width, Estimator::formula).sup();
                    row.definitional = row.lsig >= level * (1 - 1e-9);
                    row.level_ok = row.definitional && row.lsig <= level * (1 + c.delta);
                    const double ratio = s->sigma / level;
                    row.time_ok = in.i * (1 - c.delta) <= ratio && ratio <= in.I + slack_term(v, c.delta);
                    row.outside = s->sigma - real.occupation(s->sigma, sets);
                    row.occupation_ok = row.outside <= 4 * row.r * std::pow(v, 6) * t * c.delta;
                }
            }
            return row;
        });
        std::size_t kept = 0, held = 0, held_raw = 0, reached = 0, level = 0, time = 0, occ = 0, rejections = 0;
        json reps = json::array();
        for (const auto& r : rows) {
            rep.truncation().add(!r.truncated.empty(), r.truncated);
            rejections += r.rejections;
            if (!r.truncated.empty()) continue;
            ++kept;
            held += r.held;
            held_raw += r.held_raw;
            if (r.sigma_reached) {
                ++reached;
                level += r.level_ok;
                time += r.time_ok;
                occ += r.occupation_ok;
                definitional_all = definitional_all && r.definitional;
            }
            reps.push_back({{"lstar", r.lstar}, {"lower", r.lower}, {"lower_raw", r.lower_raw}, {"upper", r.upper},
                            {"i_v", r.i}, {"I_v", r.I}, {"held", r.held}, {"held_raw", r.held_raw},
                            {"rejections", r.rejections}});
            if (c.sigma_checks) {
                json& last = reps.back();
                last["r"] = r.r;
                if (r.sigma_reached)
                    last["sigma"] = {{"time", r.sigma}, {"label", r.sigma_label}, {"lstar", r.lsig},
                                     {"outside_occupation", r.outside}, {"level_ok", r.level_ok},
                                     {"time_ok", r.time_ok}, {"occupation_ok", r.occupation_ok}};
                else
                    last["sigma"] = nullptr;
            }
        }
        const Frequency f = wilson(held, kept), fr = wilson(held_raw, kept);
        const Frequency fl = wilson(level, reached), ft = wilson(time, reached), fo = wilson(occ, reached);
        freqs.push_back(f.freq);
        json entry = {{"v", v},
                      {"n", kept},
                      {"sandwich", to_json(f)},
                      {"sandwich_raw", to_json(fr)},
                      {"mean_rejections", rows.empty() ? 0.0 : double(rejections) / rows.size()},
                      {"replicates", reps}};
        if (c.sigma_checks)
            entry["sigma_checks"] = {{"reached", wilson(reached, kept).freq},
                                     {"level", to_json(fl)},
                                     {"time", to_json(ft)},
                                     {"occupation", to_json(fo)}};
        per_v.push_back(entry);
        rep.csv().rows.push_back({num(v), std::to_string(kept), std::to_string(rows.size() - kept),
                                  std::to_string(held), num(f.freq), num(f.lo), num(f.hi), num(fr.freq),
                                  std::to_string(reached), num(fl.freq), num(ft.freq), num(fo.freq),
                                  num(rows.empty() ? 0.0 : double(rejections) / rows.size())});
    }
    rep.test("sandwich frequency at the largest v above the floor", freqs.back() >= c.frequency_floor,
             {{"frequency", freqs.back()}, {"floor", c.frequency_floor}});
    rep.test("sandwich frequency nondecreasing along v_grid", nondecreasing(freqs), {{"frequencies", freqs}});
    if (c.sigma_checks) rep.test("L*(sigma_v) >= r e^v whenever sigma_v is reached", definitional_all);
    rep.results() = {{"per_v", per_v}};
    return rep.finish();
}

// ---------------------------------------------------------------------------

ExperimentReport run_localization(const ExperimentConfig& c) {
    Report rep(c);
    static const double widen[] = {0.0, 0.5, 1.0, 2.0, 4.0};
    struct Row {
        std::string truncated;
        double fraction = 0, fixed_fraction = 0, theorem_scaled = 0;
        bool normalized = false, monotone = false;
    };
    json per_v = json::array();
    rep.csv().header = {"v", "n", "truncated", "above_floor", "freq", "lo", "hi", "median_fraction",
                        "fixed_above_floor", "fixed_freq"};
    bool normalized = true, monotone = true;
    for (double v : c.v_grid) {
        const std::string pre = vlabel(v);
        rep.stream(pre + "env:<attempt>");
        rep.stream(pre + "driver");
        const ValleyParams p = c.params(v);
        const auto rows = parallel_replicates<Row>(c.replicates, c.workers, [&](std::size_t i) {
            Row row;
            Prepared prep = prepare_environment(c, p, i, pre);
            if (!prep.failure.empty()) {
                row.truncated = prep.failure;
                return row;
            }
            const auto sets = merge_intervals(
                localization_sets(*prep.env, prep.right, prep.left, v, c.delta, WidthMode::valley, c.eps));
            const auto fixed = merge_intervals(
                localization_sets(*prep.env, prep.right, prep.left, v, c.delta, WidthMode::fixed, c.eps));
            DiffusionRealization real(std::move(*prep.env),
                                      driver_config(c, derive_seed(c.base_seed, i, pre + "driver"), v, false));
            const double t = std::exp(v);
            if (!real.advance_to_time(t)) {
                row.truncated = "step budget";
                return row;
            }
            row.fraction = real.occupation(t, sets) / t;
            row.fixed_fraction = real.occupation(t, fixed) / t;
            row.theorem_scaled = (1 - row.fixed_fraction) * std::pow(std::log(t), c.c0);
            const double inf = std::numeric_limits<double>::infinity();
            row.normalized = std::abs(real.occupation(t, {Interval{-inf, inf, "line"}}) / t - 1) < 1e-9;
            row.monotone = true;
            double prev = -1;
            for (double k : widen) {
                std::vector<Interval> wide;
                for (const auto& s : sets) wide.push_back({s.lo - k * s.length(), s.hi + k * s.length(), s.label});
                const double f = real.occupation(t, merge_intervals(wide)) / t;
                row.monotone = row.monotone && f >= prev;
                prev = f;
            }
            return row;
        });
        std::vector<double> fractions, fixed_fractions, scaled;
        for (const auto& r : rows) {
            rep.truncation().add(!r.truncated.empty(), r.truncated);
            if (!r.truncated.empty()) continue;
            fractions.push_back(r.fraction);
            fixed_fractions.push_back(r.fixed_fraction);
            scaled.push_back(r.theorem_scaled);
            normalized = normalized && r.normalized;
            monotone = monotone && r.monotone;
        }
        const Frequency f = tail_frequency(fractions, c.occupation_floor);
        const Frequency ff = tail_frequency(fixed_fractions, c.occupation_floor);
        std::vector<double> sorted = fractions;
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted.empty() ? 0 : sorted[sorted.size() / 2];
        rep.test("nu(A_v) / e^v >= floor often enough at v=" + num(v), f.freq >= c.frequency_floor,
                 {{"frequency", to_json(f)}, {"floor", c.occupation_floor}, {"required", c.frequency_floor}});
        per_v.push_back({{"v", v},
                         {"n", fractions.size()},
                         {"valley_windows", {{"above_floor", to_json(f)}, {"fractions", fractions}}},
                         {"fixed_windows", {{"above_floor", to_json(ff)}, {"fractions", fixed_fractions},
                                            {"half_width", fixed_half_width(v, c.eps)}}},
                         {"outside_fixed_scaled", scaled}});
        rep.csv().rows.push_back({num(v), std::to_string(fractions.size()), std::to_string(rows.size() - fractions.size()),
                                  std::to_string(f.count), num(f.freq), num(f.lo), num(f.hi), num(median),
                                  std::to_string(ff.count), num(ff.freq)});
    }
    rep.test("occupation of the whole line equals t", normalized);
    rep.test("widening the windows never lowers the occupied fraction", monotone);
    rep.results() = {{"per_v", per_v}};
    return rep.finish();
}

// ---------------------------------------------------------------------------

ExperimentReport run_profile(const ExperimentConfig& c) {
    Report rep(c);
    struct Row {
        std::string truncated;
        bool reached = false;
        std::string label;
        double sigma = 0, r = 0;
        std::vector<Clause> flags;
        std::size_t rejections = 0;
    };
    json per_v = json::array();
    std::vector<double> c_freq, d_freq;
    std::vector<std::string> names;
    for (double v : c.v_grid) {
        const std::string pre = vlabel(v);
        rep.stream(pre + "env:<attempt>");
        rep.stream(pre + "driver");
        const ValleyParams p = c.params(v);
        const auto rows = parallel_replicates<Row>(c.replicates, c.workers, [&](std::size_t i) {
            Row row;
            Prepared prep = prepare_environment(c, p, i, pre);
            row.rejections = prep.rejections;
            if (!prep.failure.empty()) {
                row.truncated = prep.failure;
                return row;
            }
            const Integrals in = valley_integrals(*prep.env, prep.right, prep.left);
            row.r = r_for(c, in, v);
            DiffusionRealization real(std::move(*prep.env),
                                      driver_config(c, derive_seed(c.base_seed, i, pre + "driver"), v, true));
            const auto s = composite_sigma(real, prep.right, prep.left, row.r, v, c.bin_width);
            if (!s) return row;
            row.reached = true;
            row.sigma = s->sigma;
            row.label = s->label;
            row.flags = profile_events(real, s->sigma, prep.right, prep.left, row.r, v, c.delta, c.bin_width).flags;
            return row;
        });
        std::size_t kept = 0, reached = 0, rejections = 0;
        std::map<std::string, std::array<std::size_t, 3>> counts;  // true, false, unknown
        std::map<std::string, std::size_t> labels;
        for (const auto& r : rows) {
            rep.truncation().add(!r.truncated.empty(), r.truncated);
            rejections += r.rejections;
            if (!r.truncated.empty()) continue;
            ++kept;
            if (!r.reached) continue;
            ++reached;
            ++labels[r.label];
            for (const auto& f : r.flags) ++counts[f.name][f.holds ? (*f.holds ? 0 : 1) : 2];
        }
        json events = json::object();
        for (const auto& [name, cnt] : counts) {
            const Frequency f = wilson(cnt[0], cnt[0] + cnt[1]);
            events[name] = {{"true", cnt[0]}, {"false", cnt[1]}, {"unknown", cnt[2]}, {"frequency", to_json(f)}};
        }
        auto freq_of = [&](const char* name) {
            auto it = counts.find(name);
            if (it == counts.end()) return 0.0;
            const auto& cnt = it->second;
            return cnt[0] + cnt[1] ? double(cnt[0]) / double(cnt[0] + cnt[1]) : 0.0;
        };
        c_freq.push_back(freq_of("C"));
        d_freq.push_back(freq_of("D"));
        const Frequency fr = wilson(reached, kept);
        rep.test("a sigma_v is reached within budget at v=" + num(v), fr.freq >= c.frequency_floor,
                 {{"frequency", to_json(fr)}, {"floor", c.frequency_floor}});
        per_v.push_back({{"v", v},
                         {"n", kept},
                         {"r_policy", c.r_policy},
                         {"sigma_reached", to_json(fr)},
                         {"achieving_point", labels},
                         {"events", events},
                         {"mean_rejections", rows.empty() ? 0.0 : double(rejections) / rows.size()}});
        if (names.empty())
            for (const auto& [name, _] : counts) names.push_back(name);
    }
    rep.csv().header = {"v", "event", "true", "false", "unknown", "frequency"};
    for (const auto& e : per_v)
        for (const auto& [name, val] : e["events"].items())
            rep.csv().rows.push_back({num(e["v"].get<double>()), name, val["true"].dump(), val["false"].dump(),
                                      val["unknown"].dump(), num(val["frequency"]["freq"].get<double>())});
    rep.test("frequency of C nondecreasing along v_grid", nondecreasing(c_freq), {{"frequencies", c_freq}});
    rep.test("frequency of D nondecreasing along v_grid", nondecreasing(d_freq), {{"frequencies", d_freq}});
    rep.results() = {{"per_v", per_v}};
    return rep.finish();
}

// ---------------------------------------------------------------------------

ExperimentReport run_simulate(const ExperimentConfig& c) {
    Report rep(c);
    rep.stream("env");
    rep.stream("driver");
    Environment env = Environment::brownian(env_config(c, derive_seed(c.base_seed, 0, "env")));
    DriverConfig d;
    d.dt = c.dt;
    d.seed = derive_seed(c.base_seed, 0, "driver");
    d.max_steps = c.max_steps;
    DiffusionRealization real(std::move(env), d);
    const bool ok = real.advance_to_time(c.t);
    rep.truncation().add(!ok, "step budget");
    if (ok) {
        const auto formula = real.local_time_field(c.t, c.bin_width, Estimator::formula);
        const auto direct = real.local_time_field(c.t, c.bin_width, Estimator::direct);
        std::ostringstream csv;
        formula.write_csv(csv);
        rep.results() = {{"t", c.t},
                         {"position", real.value(c.t)},
                         {"max_position", real.max_position(c.t)},
                         {"min_position", real.min_position(c.t)},
                         {"lstar_formula", formula.sup()},
                         {"lstar_direct", direct.sup()},
                         {"total_formula", formula.total()},
                         {"total_direct", direct.total()},
                         {"under_resolved", formula.under_resolved},
                         {"realization", real.metadata()}};
        ExperimentReport out = rep.finish();
        out.csv = csv.str();
        return out;
    }
    rep.results() = {{"t", c.t}, {"realization", real.metadata()}};
    return rep.finish();
}

ExperimentReport run_experiment(const ExperimentConfig& c) {
    const std::string& e = c.experiment;
    if (e == "ray-knight") return run_ray_knight(c);
    if (e == "tanaka") return run_tanaka(c);
    if (e == "gamma") return run_gamma_probability(c);
    if (e == "valley-depth") return run_valley_depth(c);
    if (e == "ladder") return run_ladder_stats(c);
    if (e == "sandwich") return run_sandwich(c);
    if (e == "localization") return run_localization(c);
    if (e == "profile") return run_profile(c);
    if (e == "simulate") return run_simulate(c);
    throw ConfigError({"experiment: unknown experiment \"" + e + "\""});
}

namespace {

void write_atomic(const std::filesystem::path& target, const std::string& content) {
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

}  // namespace

std::string write_report(const ExperimentReport& r, const ExperimentConfig& c, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::string stem = c.experiment + "_" + std::to_string(c.base_seed);
    const std::filesystem::path json_path = std::filesystem::path(dir) / (stem + ".json");
    write_atomic(json_path, r.json.dump(2) + "\n");
    write_atomic(std::filesystem::path(dir) / (stem + ".csv"), r.csv);
    return json_path.string();
}

json without_wall_time(json report) {
    report.erase("wall_time");
    return report;
}

}  // namespace brox
