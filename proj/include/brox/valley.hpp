#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "brox/environment.hpp"

namespace brox {

// Valley parameters v, c1, c2, c3 and the rise thresholds they induce.
struct ValleyParams {
    double v = 0;
    double c1 = 1;
    double c2 = 1;
    double c3 = 1;

    // c1 = 2c + 8, c2 = c + 6, c3 = c + 2.
    static ValleyParams from_c(double v, double c);

    double depth() const;   // v - c1 log v: rise defining b points
    double a_rise() const;  // v - c2 log v: rise defining a points
    double c_rise() const;  // v + c3 log v: oscillation defining c+

    // Throws InvalidConfig naming the violated inequality.
    void validate() const;
};

struct Thresholds {
    double depth = 0;
    double a_rise = 0;
    double c_rise = 0;

    static Thresholds of(const ValleyParams& p) { return {p.depth(), p.a_rise(), p.c_rise()}; }
};

struct MinusValley {
    double b = 0;
    double m = 0;
    double a = 0;
};

struct PlusValley {
    double c = 0;
    double m = 0;
    double b = 0;
    double a = 0;
};

// Points of one side, in that side's own coordinate (distance from 0).
struct ValleyDecomposition {
    Side side = Side::right;
    Thresholds thresholds;
    std::optional<ValleyParams> params;
    std::vector<MinusValley> minus;
    std::optional<PlusValley> plus;
    bool truncated = false;  // fewer than the requested points were found
};

struct ValleyStep {
    double b = 0;
    double m = 0;
};

struct ValleySequence {
    std::vector<ValleyStep> steps;
    bool truncated = false;
};

// b_{i+1} = first x >= b_i where W - running min over [b_i, x] reaches the
// threshold; m_{i+1} = first argmin on [b_i, b_{i+1}]; b_0 = 0.
ValleySequence valley_sequence(Environment& env, Side side, double depth_threshold, int count);

// sup{x <= m : W(x) - W(m) >= rise} clamped below by floor.
double a_point(const Environment& env, Side side, double m, double rise, double floor);

// nullopt when c+ is not reached within the extension budget.
std::optional<PlusValley> plus_valley(Environment& env, Side side, const Thresholds& th);
std::optional<PlusValley> plus_valley(Environment& env, Side side, const ValleyParams& p);

ValleyDecomposition decompose(Environment& env, Side side, const Thresholds& th, int count = 3);
ValleyDecomposition decompose(Environment& env, Side side, const ValleyParams& p, int count = 3);

// Clause verdict: true, false, or unknown (nullopt) when the points the
// clause needs were not found within the budget.
using Verdict = std::optional<bool>;

Verdict verdict_and(const std::vector<Verdict>& parts);

struct Clause {
    std::string name;
    Verdict holds;
};

struct SideGamma {
    std::vector<Clause> gamma1;
    std::vector<Clause> gamma2;
    std::vector<Clause> gamma3;

    Verdict g1() const;
    Verdict g2() const;
    Verdict g3() const;
};

struct GammaReport {
    ValleyParams params;
    SideGamma right;
    SideGamma left;  // the hatted events, evaluated on the reversed environment
    Verdict gamma;        // G1 & G2 & hat G1 & hat G2
    Verdict gamma_prime;  // G3 & G2 & hat G3 & hat G2

    bool indeterminate() const { return !gamma.has_value() || !gamma_prime.has_value(); }
    // Names of the false clauses, prefixed by side.
    std::vector<std::string> failed_clauses() const;
};

SideGamma side_gamma(const Environment& env, const ValleyDecomposition& d, const ValleyParams& p);
GammaReport gamma_events(Environment& env, const ValleyParams& p);
GammaReport gamma_events(const Environment& env, const ValleyDecomposition& right,
                         const ValleyDecomposition& left, const ValleyParams& p);

struct ExpIntegral {
    double value = 0;
    double log_value = 0;  // -inf for an empty interval
    bool empty_interval = false;
};

// Closed-form integral of exp(-W(x) + W(m)) over [a, b] on one side.
ExpIntegral exp_integral(const SamplePath& path, double a, double b, double m);
ExpIntegral exp_integral(const Environment& env, Side side, double a, double b, double m);

struct LadderRung {
    double beta = 0;
    double mu = 0;
    double gamma = 0;
    double eta = 0;
    double top = 0;  // M_n
    double height = 0;  // h_n
};

struct LadderSequence {
    Side side = Side::right;
    std::vector<LadderRung> rungs;  // rungs[0] holds gamma_0 = 0, h_0 = 2
    bool truncated = false;

    int n() const { return static_cast<int>(rungs.size()) - 1; }
};

LadderSequence ladder_sequence(Environment& env, Side side, int n_max);

struct Interval {
    double lo = 0;
    double hi = 0;
    std::string label;

    double length() const { return hi - lo; }
};

// valley: the [e, d] windows below. fixed: [m - w, m + w] with
// w = (log v)^(4 + eps), the width at time t = e^v.
enum class WidthMode { valley, fixed };

// [e, d] around a valley bottom m on one side: d = last x in [m, b] and
// e = first x in [a, m] with W(x) - W(m) <= log(1/delta).
Interval valley_window(const SamplePath& path, double a, double m, double b, double delta);

double fixed_half_width(double v, double eps);

// The four intervals around m-_{v,1}, m+_v and their reversed counterparts,
// in two-sided coordinates.
std::vector<Interval> localization_sets(const Environment& env, const ValleyDecomposition& right,
                                        const ValleyDecomposition& left, double v, double delta,
                                        WidthMode mode, double eps = 0.5);
std::vector<Interval> localization_sets(Environment& env, const ValleyParams& p, double delta,
                                        WidthMode mode, double eps = 0.5);

// Sorted disjoint union.
std::vector<Interval> merge_intervals(std::vector<Interval> parts);

nlohmann::json to_json(const ValleyDecomposition& d);
nlohmann::json to_json(const GammaReport& g);
nlohmann::json to_json(const LadderSequence& l);

}  // namespace brox
