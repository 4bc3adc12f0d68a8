#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "brox/diffusion.hpp"
#include "brox/errors.hpp"
#include "brox/oracle.hpp"
#include "grid_oracle.hpp"

using namespace brox;

namespace {

SamplePath e1() { return SamplePath{{0, 0}, {1, -3}, {2, 1}, {3, -5}, {4, 2}}; }

Environment brownian_env(std::uint64_t seed, double step = 0.05) {
    EnvironmentConfig cfg;
    cfg.step = step;
    cfg.seed = seed;
    cfg.initial_horizon = 5;
    return Environment::brownian(cfg);
}

DriverConfig driver(std::uint64_t seed, double dt = 0.0025) {
    DriverConfig d;
    d.seed = seed;
    d.dt = dt;
    return d;
}

}  // namespace

TEST_CASE("scale function closed forms") {
    Environment zero = Environment::zero();
    for (double x : {-3.7, -0.01, 0.0, 0.5, 12.25}) CHECK(scale(zero, x) == doctest::Approx(x).epsilon(1e-12));

    Environment slope = Environment::fixed(SamplePath{{0, 0}, {1, 1}}, SamplePath{{0, 0}, {1, 0}});
    CHECK(scale(slope, 1.0) == doctest::Approx(std::exp(1.0) - 1).epsilon(1e-12));

    Environment e = Environment::fixed(e1(), SamplePath{{0, 0}, {1, 0}});
    CHECK(scale(e, 1.0) == doctest::Approx((1 - std::exp(-3.0)) / 3).epsilon(1e-12));
    CHECK(scale(e, 1.0) == doctest::Approx(0.31674).epsilon(1e-4));
    const double riemann = grid::riemann([&](double x) { return std::exp(e1().at(x)); }, 0, 3.6, 200000);
    CHECK(scale(e, 3.6) == doctest::Approx(riemann).epsilon(1e-8));
    CHECK(scale(e, -0.5) == doctest::Approx(-0.5));
    CHECK_THROWS_AS(scale(e, 5.0), HorizonError);
}

TEST_CASE("scale inverse round trip on Brownian environments") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Environment env = brownian_env(seed);
        ScaleTable table(env);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-20, 20);
        for (int i = 0; i < 500; ++i) {
            const double x = u(rng);
            const auto p = table.inverse(table.scale(x));
            CHECK(std::fabs(p.x - x) <= 1e-9 * std::max(1.0, std::fabs(x)));
            CHECK(p.w == doctest::Approx(env.value(x)).epsilon(1e-9));
        }
        CHECK(table.scale(1.0) < table.scale(1.001));
    }
}

TEST_CASE("zero environment reduces to the driver") {
    DiffusionRealization real(Environment::zero(), driver(7));
    CHECK(real.value(0) == 0);
    REQUIRE(real.advance_to_time(50));
    for (double s : {0.013, 1.0, 17.5, 49.0}) {
        CHECK(real.time_change(s) == doctest::Approx(s).epsilon(1e-12));
        CHECK(real.time_change_inverse(s) == doctest::Approx(s).epsilon(1e-12));
        CHECK(real.value(s) == doctest::Approx(real.driver(s)).epsilon(1e-12));
    }
    // tau_B(x) read directly off the driver knots.
    const double x = real.value(30) > 0 ? 0.3 : -0.3;
    auto tau = real.hitting_time(x);
    REQUIRE(tau);
    double s_ref = 0;
    for (double s = 0.01;; s += 0.01) {
        if ((x > 0 && real.driver(s) >= x) || (x < 0 && real.driver(s) <= x)) {
            s_ref = s;
            break;
        }
    }
    CHECK(*tau <= s_ref + 1e-9);
    CHECK(*tau > s_ref - 0.01 - 1e-9);
    CHECK(real.hitting_time(0.0) == 0.0);
}

TEST_CASE("time change on a plateau") {
    const double w = -std::log(2.0) / 2;
    const double eps = 1e-9;
    SamplePath two_sided{{-1e4, w}, {-eps, w}, {0, 0}, {eps, w}, {1e4, w}};
    DiffusionRealization real(Environment::from_two_sided(two_sided), driver(3));
    const double dt = real.config().dt;
    REQUIRE(real.advance_to_time(30));
    // After the first step the integrand is e^{-2w} everywhere the driver goes.
    const double t1 = dt / 2 * (1 + std::exp(-2 * w));
    for (double s : {1.0, 5.0, 12.0}) {
        CHECK(real.time_change(s) == doctest::Approx(t1 + std::exp(-2 * w) * (s - dt)).epsilon(1e-9));
        CHECK(real.time_change_inverse(real.time_change(s)) == doctest::Approx(s).epsilon(1e-6));
    }
}

TEST_CASE("local time normalization and estimator agreement") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        DiffusionRealization real(brownian_env(seed), driver(100 + seed));
        const double t = 300;
        const auto direct = real.local_time_field(t, 0.1, Estimator::direct);
        const auto formula = real.local_time_field(t, 0.1, Estimator::formula);
        CHECK(direct.total() == doctest::Approx(t).epsilon(1e-9));
        CHECK(std::fabs(formula.total() - t) / t < 0.01);
        CHECK_FALSE(direct.under_resolved);
        double worst = 0;
        for (const auto& b : direct.bins)
            if (b.value * b.width > 0.01 * t)
                worst = std::max(worst, std::fabs(formula.at(b.center) / b.value - 1));
        CHECK(worst < 0.1);
        CHECK(real.local_time_field(t, 0.01, Estimator::direct).under_resolved);

        double prev = 0;
        for (double u : {10.0, 50.0, 120.0, 300.0}) {
            const double sup = real.local_time_field(u, 0.1, Estimator::direct).sup();
            CHECK(sup >= prev);
            prev = sup;
        }
        CHECK(real.occupation(t, {{-1e9, 1e9, "all"}}) == doctest::Approx(t).epsilon(1e-9));
    }
}

TEST_CASE("normalization holds at the bottom of a deep valley") {
    // driver steps near W = -22 are ~1e-22, below the resolution of the
    // cumulative driver time
    Environment env = Environment::fixed(SamplePath{{0, 0}, {1, 2}, {2, 4}},
                                         SamplePath{{0, 0}, {10, -20}, {11, -22}, {12, -21}, {20, 0}});
    DiffusionRealization real(std::move(env), driver(5));
    const double t = 60;
    const auto formula = real.local_time_field(t, 0.1, Estimator::formula);
    const auto direct = real.local_time_field(t, 0.1, Estimator::direct);
    REQUIRE(real.min_position(t) < -10.5);
    CHECK(direct.total() == doctest::Approx(t).epsilon(1e-9));
    CHECK(std::fabs(formula.total() - t) / t < 0.01);
    CHECK(formula.at(-11.0) == doctest::Approx(direct.at(-11.0)).epsilon(0.1));
    const auto reach = real.inverse_local_time(1.0, -11.0, 0.1);
    REQUIRE(reach);
    CHECK(*reach < t);
}

TEST_CASE("zero environment estimators match a driver occupation estimate") {
    DiffusionRealization real(Environment::zero(), driver(11));
    const double t = 400, bw = 0.1;
    const auto direct = real.local_time_field(t, bw, Estimator::direct);
    const auto formula = real.local_time_field(t, bw, Estimator::formula);
    // Reference: occupation of the driver sampled finely in its own time.
    std::vector<double> occ(direct.bins.size(), 0);
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
        const double s = (i + 0.5) * t / n;
        const long long j = bin_index(real.driver(s), bw) - bin_index(direct.bins.front().center, bw);
        if (j >= 0 && j < static_cast<long long>(occ.size())) occ[static_cast<std::size_t>(j)] += t / n;
    }
    double worst = 0;
    for (std::size_t i = 0; i < occ.size(); ++i) {
        const auto& b = direct.bins[i];
        if (b.value * bw <= 0.01 * t) continue;
        const double ref = occ[i] / bw;
        worst = std::max({worst, std::fabs(b.value / ref - 1), std::fabs(formula.at(b.center) / ref - 1)});
    }
    CHECK(worst < 0.05);
}

TEST_CASE("hitting times compose with the value map") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        DiffusionRealization real(brownian_env(seed), driver(seed));
        for (double t0 : {0.7, 4.0, 25.0}) {
            const double x = real.value(t0);
            auto t = real.hitting_time(x);
            REQUIRE(t);
            CHECK(*t <= t0);
            CHECK(std::fabs(real.value(*t) - x) <= 1e-6 * std::max(1.0, std::fabs(x)));
        }
    }
}

TEST_CASE("inverse local time") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        DiffusionRealization real(brownian_env(seed), driver(seed + 50));
        // Target the most visited bin so every level is reached by t = 200.
        const auto base = real.local_time_field(200, 0.1, Estimator::direct);
        const auto top = std::max_element(base.bins.begin(), base.bins.end(),
                                          [](const auto& a, const auto& b) { return a.value < b.value; });
        const double y = top->center, level = 0.8 * top->value;
        auto s1 = real.inverse_local_time(level / 4, y, 0.1);
        auto s2 = real.inverse_local_time(level / 2, y, 0.1);
        auto s3 = real.inverse_local_time(level, y, 0.1);
        REQUIRE((s1 && s2 && s3));
        CHECK(*s1 <= *s2);
        CHECK(*s2 <= *s3);
        CHECK(*s3 <= 200);
        const auto field = real.local_time_field(*s2, 0.1, Estimator::formula);
        CHECK(field.at(y) == doctest::Approx(level / 2).epsilon(0.05));
        const auto direct = real.local_time_field(*s2, 0.1, Estimator::direct);
        CHECK(direct.at(y) == doctest::Approx(level / 2).epsilon(0.1));
    }
    // Zero environment at 0: sigma is the driver's own inverse local time.
    DiffusionRealization real(Environment::zero(), driver(5));
    auto s = real.inverse_local_time(1.0, 0.0, 0.1);
    REQUIRE(s);
    CHECK(real.time_change(*s) == doctest::Approx(*s).epsilon(1e-12));
    CHECK(real.local_time_field(*s, 0.1, Estimator::direct).at(0) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("trapezoid time change against a refined driver grid") {
    // The trapezoid misses the environment's variation inside a driver step,
    // so the gap to a 10x refined grid shrinks with dt but stays above 1e-3
    // at practical steps.
    double previous = 1;
    for (double dt : {1e-2, 1e-3, 1e-4}) {
        double worst = 0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            DiffusionRealization real(brownian_env(seed, 0.01), driver(seed + 200, dt));
            REQUIRE(real.advance_to_time(dt < 1e-3 ? 2.0 : 20.0));
            const double coarse = real.time_change(real.driver_time());
            const double fine = real.refined_time_change(real.steps(), 10, seed);
            worst = std::max(worst, std::fabs(fine / coarse - 1));
        }
        MESSAGE("dt " << dt << " worst relative difference " << worst);
        CHECK(worst < previous);
        previous = worst;
    }
    CHECK(previous < 5e-3);
}

TEST_CASE("sign symmetry on a symmetric environment") {
    SamplerConfig sc;
    sc.step = 0.01;
    sc.seed = 42;
    sc.horizon = 30;
    const SamplePath side = sample_brownian(sc, false);
    std::size_t positive = 0;
    const std::size_t n = 10000;
    for (std::size_t i = 0; i < n; ++i) {
        DiffusionRealization real(Environment::fixed(side, side, Continuation::flat), driver(i + 1));
        if (real.value(1.0) > 0) ++positive;
    }
    const double freq = static_cast<double>(positive) / n;
    CHECK(freq >= 0.47);
    CHECK(freq <= 0.53);
}

TEST_CASE("composite sigma picks the dominant well") {
    // Narrow deep well on the right, wide shallow one on the left.
    Environment proto = Environment::fixed(SamplePath{{0, 0}, {0.5, -8}, {1, 4}},
                                           SamplePath{{0, 0}, {2, -2}, {4, 4}}, Continuation::flat);
    const Thresholds th{1.5, 1.5, 1.8};
    const auto right = decompose(proto, Side::right, th, 1);
    const auto left = decompose(proto, Side::left, th, 1);
    REQUIRE(right.plus);
    REQUIRE(left.plus);
    CHECK(sigma_targets(right, left).size() == 4);
    int on_right = 0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        DiffusionRealization real(
            Environment::fixed(proto.side(Side::right), proto.side(Side::left), Continuation::flat),
            driver(static_cast<std::uint64_t>(i) + 1, 1e-3));
        auto sigma = composite_sigma(real, right, left, 50.0, 0.0, 0.05);
        REQUIRE(sigma);
        if (sigma->point > 0) ++on_right;
        for (const auto& [label, x] : sigma_targets(right, left)) {
            if (label != sigma->label) continue;
            CHECK(x == sigma->point);
        }
        const auto field = real.local_time_field(sigma->sigma, 0.05, Estimator::formula);
        CHECK(field.sup() >= 50.0 * (1 - 1e-6));
    }
    CHECK(on_right >= 0.95 * n);

    ValleyDecomposition empty;
    CHECK_THROWS_AS(sigma_targets(empty, left), DomainError);
}

TEST_CASE("profile events at time zero and export formats") {
    Environment proto = Environment::fixed(SamplePath{{0, 0}, {0.5, -8}, {1, 2}},
                                           SamplePath{{0, 0}, {2, -2}, {4, 2}});
    const Thresholds th{1.5, 1.5, 1.8};
    const auto right = decompose(proto, Side::right, th, 1);
    const auto left = decompose(proto, Side::left, th, 1);
    DiffusionRealization real(Environment::fixed(proto.side(Side::right), proto.side(Side::left)),
                              driver(1, 1e-3));
    const auto events = profile_events(real, 0.0, right, left, 1.0, 1.0, 0.3, 0.05);
    CHECK(events.get("D") == Verdict(true));
    CHECK(events.get("hat_D") == Verdict(true));
    CHECK(events.get("C") == Verdict(true));
    CHECK_FALSE(events.get("A2").has_value());
    CHECK(to_json(events).size() == 12);

    REQUIRE(real.advance_to_time(5));
    std::ostringstream csv;
    real.local_time_field(5, 0.05, Estimator::direct).write_csv(csv);
    CHECK(csv.str().rfind("x_center,width,L\n", 0) == 0);
    const auto meta = real.metadata();
    CHECK(meta["steps"].get<std::size_t>() == real.steps());
    CHECK(meta["dt"].get<double>() == 1e-3);
}

TEST_CASE("Ray-Knight at the diffusion level") {
    // W = 0: L(sigma(r, 0), x) is the 0-dimensional squared Bessel process
    // started at r, read at time |x|.
    const double r = 1, x = 1, bw = 0.1;
    std::vector<double> sim, ref;
    std::size_t truncated = 0;
    Rng rng(99);
    for (std::uint64_t i = 0; i < 400; ++i) {
        DriverConfig d = driver(i + 1, 0.004);
        d.max_steps = 2'000'000;
        DiffusionRealization real(Environment::zero(), d);
        auto sigma = real.inverse_local_time(r, 0, bw);
        if (!sigma) {
            ++truncated;
            continue;
        }
        sim.push_back(real.local_time_field(*sigma, bw, Estimator::formula).at(x));
        ref.push_back(sq_bessel0_transition(r, x, rng));
    }
    CHECK(truncated < 20);
    const auto res = ks_two_sample(sim, ref, Alpha::p01, "sq_bessel0");
    MESSAGE("KS " << res.statistic << " threshold " << res.threshold);
    CHECK(res.pass);
}

TEST_CASE("driver configuration is validated") {
    DriverConfig bad;
    bad.dt = 0;
    CHECK_THROWS_AS(DiffusionRealization(Environment::zero(), bad), InvalidConfig);
    DriverConfig tiny = driver(1);
    tiny.max_steps = 10;
    DiffusionRealization real(Environment::zero(), tiny);
    CHECK_FALSE(real.advance_to_time(100));
    CHECK_THROWS_AS(real.value(100), HorizonError);
    CHECK_FALSE(real.hitting_time(50.0).has_value());
}
