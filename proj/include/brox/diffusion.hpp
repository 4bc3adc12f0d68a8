#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "brox/environment.hpp"
#include "brox/sampling.hpp"
#include "brox/valley.hpp"

namespace brox {

// Scale function S(x) = int_0^x e^{W} of an environment, tabulated at the
// knots of both sides and extended with the environment. Values are kept in
// long double: deep in a valley the increments of S are many orders of
// magnitude below S itself.
class ScaleTable {
public:
    explicit ScaleTable(Environment& env) : env_(&env) {}

    long double scale(double x);

    struct Point {
        double x = 0;
        double w = 0;  // W(x)
    };
    // Exact inverse on the segment containing s; HorizonError past the budget.
    Point inverse(long double s);

    // int_lo^hi e^{sign W(x)} dx over the two-sided line, sign = +1 or -1.
    long double exp_integral(double lo, double hi, int sign);

private:
    struct SideTable {
        std::vector<long double> cum;  // S on this side at the knots, >= 0
        std::size_t hint = 0;
    };
    SideTable& table(Side s) { return s == Side::right ? right_ : left_; }
    void sync(Side s);
    long double side_scale(Side s, double u);

    Environment* env_;
    SideTable right_;
    SideTable left_;
};

double scale(Environment& env, double x);
double scale_inverse(Environment& env, double s);

struct DriverConfig {
    // Diffusion time advanced per driver step: the driver step in its own
    // time is dt e^{2W(X)}, so X moves about sqrt(dt) per step everywhere.
    double dt = 0.01;
    std::uint64_t seed = 0;
    std::size_t max_steps = 50'000'000;

    void validate() const;
};

enum class Estimator { formula, direct };

const char* to_string(Estimator e);

struct LocalTimeBin {
    double center = 0;
    double width = 0;
    double value = 0;
};

// Binned local time at time t; bins are [ (j - 1/2) w, (j + 1/2) w ).
struct LocalTimeField {
    double t = 0;
    double bin_width = 0;
    Estimator estimator = Estimator::direct;
    std::vector<LocalTimeBin> bins;
    bool under_resolved = false;  // bins narrower than the typical step of X

    double total() const;  // sum of value * width
    double sup() const;
    double at(double x) const;  // 0 outside the occupied range
    void write_csv(std::ostream& out) const;
};

// Brox diffusion X = S^{-1}(B(T^{-1}(t))) built from an environment and a
// driving Brownian motion sampled on an adaptive grid. The trajectory is
// stored step by step: driver time s_k, B(s_k), X_k = S^{-1}(B(s_k)) and
// T(s_k) by the trapezoid rule. Single-writer: stepping mutates the
// environment, the table and the trajectory.
class DiffusionRealization {
public:
    DiffusionRealization(Environment env, DriverConfig config);
    DiffusionRealization(const DiffusionRealization&) = delete;
    DiffusionRealization& operator=(const DiffusionRealization&) = delete;

    Environment& env() { return env_; }
    ScaleTable& scale_table() { return table_; }
    const DriverConfig& config() const { return cfg_; }

    std::size_t steps() const { return s_.size() - 1; }
    double diffusion_time() const { return t_.back(); }
    double driver_time() const { return s_.back(); }
    bool budget_exhausted() const { return steps() >= cfg_.max_steps; }

    // Steps until T reaches t; false if the step budget runs out first.
    bool advance_to_time(double t);
    // Steps until the driver time reaches s.
    bool advance_to_driver_time(double s);

    // The calls below extend the trajectory as needed and throw HorizonError
    // when the step budget does not suffice.
    double value(double t);
    double time_change(double s);
    double time_change_inverse(double t);
    double driver(double s);

    // T(tau_B(S(x))); nullopt when the driver does not reach S(x) in budget.
    std::optional<double> hitting_time(double x);

    LocalTimeField local_time_field(double t, double bin_width, Estimator estimator);
    // nu_t of a union of intervals, exact on the piecewise-linear trajectory.
    double occupation(double t, const std::vector<Interval>& set);
    double max_position(double t);
    double min_position(double t);

    struct Reach {
        double time = 0;         // diffusion time
        double driver_time = 0;  // s with T(s) = time
        std::size_t target = 0;  // index of the first target reached
    };
    // First time the formula-estimator bin around some y_i holds local time
    // level_i; nullopt when none is reached within the budget.
    std::optional<Reach> first_local_time_reach(const std::vector<double>& points,
                                                const std::vector<double>& levels,
                                                double bin_width);
    // sigma(r, y) = T(sigma_B(r e^{W(y)}, S(y))) with the Brownian local time binned.
    std::optional<double> inverse_local_time(double r, double y, double bin_width);

    // T at the end of step `upto` recomputed with `factor` - 1 Brownian-bridge
    // points inserted into every driver step.
    double refined_time_change(std::size_t upto, int factor, std::uint64_t seed);

    nlohmann::json metadata() const;

private:
    void step();
    std::size_t step_at_time(double t);  // k with t_k <= t <= t_{k+1}
    long double bin_edge_scale(long long j, double bin_width);

    Environment env_;
    ScaleTable table_;
    DriverConfig cfg_;
    Rng rng_;
    std::normal_distribution<double> normal_;
    std::vector<double> s_;
    std::vector<double> ds_;  // s_[k+1] - s_[k] before rounding; deep valleys underflow s_
    std::vector<long double> b_;
    std::vector<double> x_;
    std::vector<double> w_;
    std::vector<double> t_;
};

long long bin_index(double x, double bin_width);

struct CompositeSigma {
    double sigma = 0;
    std::string label;  // m-, m+, hat_m-, hat_m+
    double point = 0;   // two-sided coordinate of the achieving point
};

// Four target points m-_{v,1}, m+_v and their reversed counterparts, each
// with label and two-sided coordinate.
std::vector<std::pair<std::string, double>> sigma_targets(const ValleyDecomposition& right,
                                                          const ValleyDecomposition& left);

// min over the four sigma(r e^v, point); nullopt when none is reached in budget.
std::optional<CompositeSigma> composite_sigma(DiffusionRealization& real,
                                              const ValleyDecomposition& right,
                                              const ValleyDecomposition& left, double r, double v,
                                              double bin_width);

struct ProfileEvents {
    std::vector<Clause> flags;  // A1, A2, B1, B2, C, D and hat_ versions
    Verdict get(const std::string& name) const;
};

ProfileEvents profile_events(DiffusionRealization& real, double stop_time,
                             const ValleyDecomposition& right, const ValleyDecomposition& left,
                             double r, double v, double delta, double bin_width,
                             Estimator estimator = Estimator::formula);

nlohmann::json to_json(const ProfileEvents& p);

}  // namespace brox
