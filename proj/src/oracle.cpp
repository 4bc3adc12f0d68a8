#include "brox/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "brox/errors.hpp"

namespace brox {

double bessel_j0(double x) {
    // sum_k (-1)^k (x^2/4)^k / (k!)^2; terms fall below 1e-20 well before k = 30 for |x| <= 4
    const double q = x * x / 4.0;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 40; ++k) {
        term *= -q / (static_cast<double>(k) * k);
        sum += term;
        if (std::abs(term) < 1e-22) break;
    }
    return sum;
}

double j0_constant() {
    double lo = 2.0, hi = 3.0;  // J0(2) > 0 > J0(3)
    for (int i = 0; i < 200 && hi - lo > 0; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (bessel_j0(mid) > 0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::string LawSpec::tag() const {
    std::ostringstream s;
    switch (law) {
        case Law::sup_sq_bessel0: s << "sup_sq_bessel0"; break;
        case Law::sq_bessel2_marginal: s << "sq_bessel2_marginal(v=" << p1 << ")"; break;
        case Law::exponential: s << "exponential(mean=" << p1 << ")"; break;
        case Law::gamma: s << "gamma(shape=" << p1 << ",scale=" << p2 << ")"; break;
    }
    return s.str();
}

void LawSpec::validate() const {
    switch (law) {
        case Law::sup_sq_bessel0: return;
        case Law::sq_bessel2_marginal:
        case Law::exponential:
            if (!(p1 > 0) || !std::isfinite(p1)) throw DomainError(tag() + ": parameter must be positive");
            return;
        case Law::gamma:
            if (!(p1 > 0) || !(p2 > 0) || !std::isfinite(p1) || !std::isfinite(p2))
                throw DomainError(tag() + ": parameters must be positive");
            return;
    }
}

double law_cdf(const LawSpec& law, double x) {
    law.validate();
    if (std::isnan(x)) throw DomainError("law_cdf: NaN argument");
    switch (law.law) {
        case Law::sup_sq_bessel0:
            // P(sup Z >= M) = 1/M for M >= 1
            return x <= 1 ? 0.0 : 1.0 - 1.0 / x;
        case Law::sq_bessel2_marginal:
            return x <= 0 ? 0.0 : -std::expm1(-x / (2 * law.p1));
        case Law::exponential:
            return x <= 0 ? 0.0 : -std::expm1(-x / law.p1);
        case Law::gamma:
            if (x <= 0) return 0.0;
            if (std::isinf(x)) return 1.0;
            return boost::math::gamma_p(law.p1, x / law.p2);
    }
    return 0.0;
}

double law_tail(const LawSpec& law, double x) {
    law.validate();
    if (std::isnan(x)) throw DomainError("law_tail: NaN argument");
    switch (law.law) {
        case Law::sup_sq_bessel0:
            return x <= 1 ? 1.0 : 1.0 / x;
        case Law::sq_bessel2_marginal:
            return x <= 0 ? 1.0 : std::exp(-x / (2 * law.p1));
        case Law::exponential:
            return x <= 0 ? 1.0 : std::exp(-x / law.p1);
        case Law::gamma:
            if (x <= 0) return 1.0;
            if (std::isinf(x)) return 0.0;
            return boost::math::gamma_q(law.p1, x / law.p2);
    }
    return 0.0;
}

double ks_coefficient(Alpha alpha) { return alpha == Alpha::p05 ? 1.36 : 1.63; }

nlohmann::json to_json(const TestResult& r) {
    return {{"statistic", r.statistic},
            {"threshold", r.threshold},
            {"n", r.n},
            {"pass", r.pass},
            {"law_tag", r.law_tag}};
}

namespace {

void require_samples(const std::vector<double>& s, std::size_t min_n, const char* what) {
    if (s.size() < min_n)
        throw InsufficientData(std::string(what) + ": need at least " + std::to_string(min_n) +
                               " samples, got " + std::to_string(s.size()));
    for (double x : s)
        if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite sample");
}

}  // namespace

TestResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf,
                   Alpha alpha, std::string law_tag) {
    require_samples(samples, 50, "ks_test");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    TestResult r;
    r.statistic = d;
    r.n = samples.size();
    r.threshold = ks_coefficient(alpha) / std::sqrt(n);
    r.pass = r.statistic < r.threshold;
    r.law_tag = std::move(law_tag);
    return r;
}

TestResult ks_test(std::vector<double> samples, const LawSpec& law, Alpha alpha) {
    law.validate();
    return ks_test(std::move(samples), [&law](double x) { return law_cdf(law, x); }, alpha,
                   law.tag());
}

namespace {

double ks_distance(std::vector<double>& a, std::vector<double>& b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(i / n - j / m));
    }
    return d;
}

}  // namespace

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b, Alpha alpha,
                         std::string law_tag) {
    require_samples(a, 50, "ks_two_sample");
    require_samples(b, 50, "ks_two_sample");
    const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
    TestResult r;
    r.statistic = ks_distance(a, b);
    r.n = a.size();
    r.threshold = ks_coefficient(alpha) * std::sqrt((n + m) / (n * m));
    r.pass = r.statistic < r.threshold;
    r.law_tag = std::move(law_tag);
    return r;
}

TestResult ks_two_sample_fixed(std::vector<double> a, std::vector<double> b, double threshold,
                               std::string law_tag) {
    require_samples(a, 50, "ks_two_sample");
    require_samples(b, 50, "ks_two_sample");
    TestResult r;
    r.statistic = ks_distance(a, b);
    r.n = a.size();
    r.threshold = threshold;
    r.pass = r.statistic < r.threshold;
    r.law_tag = std::move(law_tag);
    return r;
}

nlohmann::json to_json(const Frequency& f) {
    return {{"count", f.count}, {"n", f.n}, {"freq", f.freq}, {"wilson_lo", f.lo}, {"wilson_hi", f.hi}};
}

Frequency wilson(std::size_t count, std::size_t n) {
    Frequency f;
    f.count = count;
    f.n = n;
    if (n == 0) return f;
    const double z = 1.959963984540054;
    const double nn = static_cast<double>(n);
    const double p = count / nn;
    const double denom = 1 + z * z / nn;
    const double centre = (p + z * z / (2 * nn)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
    f.freq = p;
    f.lo = std::max(0.0, centre - half);
    f.hi = std::min(1.0, centre + half);
    if (count == n) f.hi = 1.0;
    if (count == 0) f.lo = 0.0;
    return f;
}

Frequency tail_frequency(const std::vector<double>& samples, double threshold) {
    std::size_t c = 0;
    for (double x : samples)
        if (x >= threshold) ++c;
    return wilson(c, samples.size());
}

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw InsufficientData("pearson_correlation: need two equally sized samples");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double bessel3_sup_tail_lower(double a, double x) {
    return a / std::sqrt(x) * std::exp(-a * a / (2 * x));
}

double ridge_integral_tail_upper(double lambda, double k) {
    const double j0 = j0_constant();
    return k * std::exp(-j0 * j0 * lambda / 16);
}

double eta_integral_lower_tail_upper(double lambda, double k) {
    const double e = std::numbers::e;
    const double s = std::sqrt(lambda);
    return k * (2 / (e * s) + e * s / 2) * std::exp(-2 / (e * e * lambda));
}

}  // namespace brox
