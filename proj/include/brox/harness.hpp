#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "brox/errors.hpp"
#include "brox/valley.hpp"

namespace brox {

// Raised with every violated field listed, one per line.
struct ConfigError : InvalidConfig {
    std::vector<std::string> problems;
    explicit ConfigError(std::vector<std::string> problems);
};

// Settings shared by all experiments; fields an experiment does not use are
// echoed but ignored. Defaults depend on the experiment (see defaults_for).
struct ExperimentConfig {
    std::string experiment;
    std::vector<double> v_grid;
    std::size_t replicates = 1;
    std::uint64_t base_seed = 0;

    double step = 0.01;     // knot spacing of sampled paths (environment, driver walk)
    double growth = 0.0;    // geometric environment grid
    double dt = 0.0025;     // diffusion time per driver step
    double bin_width = 0.1;
    std::size_t knot_budget = 1'000'000;
    std::size_t max_steps = 50'000'000;

    double delta = 0.1;
    std::string r_policy = "i_v";  // unit | i_v | I_v
    std::optional<double> c;       // when set, c1 = 2c + 8, c2 = c + 6, c3 = c + 2
    double c0 = 11;
    double c1 = 1;
    double c2 = 1;
    double c3 = 1;
    bool condition_on_gamma = true;
    std::size_t max_rejections = 1000;

    // Ray-Knight
    double a = 1;
    std::vector<double> y_grid;
    double r = 1;
    double ceiling = 2;  // upper reflection level for the second Ray-Knight check
    std::size_t sup_replicates = 20000;
    double sup_dt = 1e-4;

    // Tanaka
    double horizon_factor = 4;  // Bessel paths sampled on [0, factor * v^2]
    double ks_threshold = 0.05;

    // Ladder
    int n_max = 7;
    std::vector<double> lambdas;
    std::vector<double> eta_lambdas;
    double slack = 10;

    // Thresholds of the pass/fail checks
    double gamma_ceiling = 1.0;
    double frequency_floor = 0.85;
    double occupation_floor = 0.9;
    double truncation_cap = 0.2;
    double eps = 0.5;
    bool sigma_checks = true;
    double sigma_step_factor = 3;  // step budget for sigma_v, in units of e^v / dt

    // simulate
    double t = 100;

    std::size_t workers = 1;
    std::string output = ".";

    ValleyParams params(double v) const;
};

const std::vector<std::string>& experiment_names();

// Defaults for an experiment, before any user value is applied.
ExperimentConfig defaults_for(const std::string& experiment);

// Parses a JSON object, filling defaults; unknown keys, wrong types and
// cross-field violations (v against c1) are all collected into ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig parse_config_text(const std::string& text);
nlohmann::json to_json(const ExperimentConfig& c);
// Applies "key=value" overrides (value parsed as JSON, else as a string).
nlohmann::json apply_overrides(nlohmann::json j, const std::vector<std::string>& overrides);

struct ExperimentReport {
    nlohmann::json json;
    std::string csv;  // per-v statistics
    bool pass = true;
    bool truncation_exceeded = false;
};

ExperimentReport run_ray_knight(const ExperimentConfig& c);
ExperimentReport run_tanaka(const ExperimentConfig& c);
ExperimentReport run_gamma_probability(const ExperimentConfig& c);
ExperimentReport run_valley_depth(const ExperimentConfig& c);
ExperimentReport run_sandwich(const ExperimentConfig& c);
ExperimentReport run_localization(const ExperimentConfig& c);
ExperimentReport run_ladder_stats(const ExperimentConfig& c);
ExperimentReport run_profile(const ExperimentConfig& c);
ExperimentReport run_simulate(const ExperimentConfig& c);

ExperimentReport run_experiment(const ExperimentConfig& c);

// `{experiment}_{base_seed}.json` and `.csv` in dir, each written to a
// temporary file and renamed. Returns the JSON path.
std::string write_report(const ExperimentReport& r, const ExperimentConfig& c, const std::string& dir);

// Runs fn(0) .. fn(n-1) on up to `workers` threads; results come back in
// index order whatever the completion order.
template <typename T>
std::vector<T> parallel_replicates(std::size_t n, std::size_t workers,
                                   const std::function<T(std::size_t)>& fn) {
    std::vector<std::optional<T>> slots(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i; (i = next++) < n;) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = n;
            }
        }
    };
    const std::size_t count = std::max<std::size_t>(1, std::min(workers, n));
    if (count == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < count; ++k) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    std::vector<T> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// The report without its wall-time field, for reproducibility comparisons.
nlohmann::json without_wall_time(nlohmann::json report);

}  // namespace brox
