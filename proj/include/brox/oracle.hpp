#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace brox {

// J0 by its ascending series; accurate for |x| <= 4.
double bessel_j0(double x);
// Smallest positive root of J0, by bisection on [2, 3].
double j0_constant();

enum class Law { sup_sq_bessel0, sq_bessel2_marginal, exponential, gamma };

struct LawSpec {
    Law law = Law::exponential;
    double p1 = 1;  // sq_bessel2_marginal: v; exponential: mean; gamma: shape
    double p2 = 1;  // gamma: scale

    static LawSpec sup_sq_bessel0() { return {Law::sup_sq_bessel0, 0, 0}; }
    static LawSpec sq_bessel2_marginal(double v) { return {Law::sq_bessel2_marginal, v, 0}; }
    static LawSpec exponential(double mean) { return {Law::exponential, mean, 0}; }
    static LawSpec gamma(double shape, double scale) { return {Law::gamma, shape, scale}; }

    std::string tag() const;
    void validate() const;  // throws DomainError
};

// P(X <= x). For sup_sq_bessel0, X is the supremum of a 0-dimensional
// squared Bessel process started at 1.
double law_cdf(const LawSpec& law, double x);
// P(X >= x); for the continuous laws here this is 1 - law_cdf.
double law_tail(const LawSpec& law, double x);

enum class Alpha { p05, p01 };

double ks_coefficient(Alpha alpha);  // 1.36 or 1.63

struct TestResult {
    double statistic = 0;
    double threshold = 0;
    std::size_t n = 0;
    bool pass = false;
    std::string law_tag;
};

nlohmann::json to_json(const TestResult& r);

// One-sample Kolmogorov-Smirnov against a continuous cdf. Needs n >= 50.
TestResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf,
                   Alpha alpha, std::string law_tag);
TestResult ks_test(std::vector<double> samples, const LawSpec& law, Alpha alpha);
// Two-sample version with threshold c(alpha) sqrt((n + m) / (n m)).
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b, Alpha alpha,
                         std::string law_tag);
// Kolmogorov-Smirnov distance against an explicit threshold.
TestResult ks_two_sample_fixed(std::vector<double> a, std::vector<double> b, double threshold,
                               std::string law_tag);

struct Frequency {
    std::size_t count = 0;
    std::size_t n = 0;
    double freq = 0;
    double lo = 0;  // 95% Wilson interval
    double hi = 0;
};

nlohmann::json to_json(const Frequency& f);

Frequency wilson(std::size_t count, std::size_t n);
// Fraction of samples >= threshold.
Frequency tail_frequency(const std::vector<double>& samples, double threshold);

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y);

// Inequality envelopes (one-sided reference curves, constants not known).
// Lower bound (a / sqrt x) e^{-a^2 / 2x} for the 3-d Bessel running maximum tail.
double bessel3_sup_tail_lower(double a, double x);
// K e^{-j0^2 lambda / 16}: tail of the integral of e^{-W + W(mu)} up to the ridge.
double ridge_integral_tail_upper(double lambda, double k);
// K (2 / (e sqrt l) + e sqrt l / 2) e^{-2 / (e^2 l)}: lower tail of the integral up to eta.
double eta_integral_lower_tail_upper(double lambda, double k);

}  // namespace brox
