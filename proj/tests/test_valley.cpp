#include <doctest.h>

#include <cmath>
#include <random>

#include "brox/errors.hpp"
#include "brox/oracle.hpp"
#include "brox/valley.hpp"
#include "grid_oracle.hpp"

using namespace brox;

namespace {

SamplePath e1() { return SamplePath{{0, 0}, {1, -3}, {2, 1}, {3, -5}, {4, 2}}; }

Environment one_sided(const SamplePath& right) {
    return Environment::fixed(right, SamplePath{{0, 0}, {1, 0}});
}

std::size_t index_of(const grid::Grid& g, double x) {
    for (std::size_t i = 0; i < g.x.size(); ++i)
        if (g.x[i] == x) return i;
    FAIL("grid position not found");
    return 0;
}

struct BruteDecomposition {
    std::vector<MinusValley> minus;
    std::optional<PlusValley> plus;
};

// Each stage restarts from the exact previous point of `exact`, so every
// operation is compared on its own rather than through accumulated offsets.
BruteDecomposition brute_decompose(const SamplePath& w, const grid::Grid& g, const Thresholds& th,
                                   const ValleyDecomposition& exact) {
    BruteDecomposition out;
    for (std::size_t i = 0; i <= exact.minus.size(); ++i) {
        const double from = i == 0 ? 0.0 : exact.minus[i - 1].b;
        const grid::Grid t = grid::tail(g, w, from);
        auto b = grid::oscillation(t, 0, th.depth);
        if (!b) break;
        const std::size_t bi = index_of(t, *b);
        const std::size_t mi = grid::argmin(t, 0, bi);
        auto ai = grid::last_index(t, 0, mi, t.w[mi] + th.a_rise, true);
        out.minus.push_back({*b, t.x[mi], ai ? t.x[*ai] : from});
        if (i == exact.minus.size()) break;
    }
    if (auto c = grid::oscillation(g, 0, th.c_rise)) {
        const std::size_t ci = index_of(g, *c);
        const std::size_t mi = grid::argmin(g, 0, ci);
        PlusValley p;
        p.c = *c;
        p.m = g.x[mi];
        p.b = g.x[*grid::first_index(g, mi, ci, g.w[mi] + th.depth, true)];
        auto ai = grid::last_index(g, 0, mi, g.w[mi] + th.a_rise, true);
        p.a = ai ? g.x[*ai] : 0.0;
        out.plus = p;
    }
    return out;
}

// Hand-built side: gentle slopes, a third b point far beyond v^6 = 64 at v = 2.
SamplePath stretched_side() {
    return SamplePath{{0, 0}, {20, -2}, {40, 0}, {65, -2.5}, {90, 0}, {120, -3}, {170, 2}};
}

}  // namespace

TEST_CASE("valley parameters") {
    const auto p = ValleyParams::from_c(10, 21);
    CHECK(p.c1 == 50);
    CHECK(p.c2 == 27);
    CHECK(p.c3 == 23);
    CHECK(p.depth() < 0);
    try {
        p.validate();
        FAIL("expected rejection");
    } catch (const InvalidConfig& e) {
        CHECK(std::string(e.what()).find("v - c1 log v") != std::string::npos);
    }
    CHECK_NOTHROW(ValleyParams({10, 1, 1, 1}).validate());
    CHECK_THROWS_AS(ValleyParams({1, 1, 1, 1}).validate(), InvalidConfig);
}

TEST_CASE("valley_sequence on the zigzag") {
    Environment env = one_sided(e1());
    const auto seq = valley_sequence(env, Side::right, 2, 3);
    REQUIRE(seq.steps.size() == 3);
    CHECK_FALSE(seq.truncated);
    CHECK(seq.steps[0].b == 1.5);
    CHECK(seq.steps[0].m == 1);
    CHECK(seq.steps[1].b == 2.0);
    CHECK(seq.steps[1].m == 1.5);
    CHECK(seq.steps[2].b == doctest::Approx(3 + 2.0 / 7).epsilon(1e-15));
    CHECK(seq.steps[2].m == 3);

    const auto g = grid::refine(e1(), 1000);
    ValleyDecomposition exact;
    for (const auto& s : seq.steps) exact.minus.push_back({s.b, s.m, 0});
    const auto brute = brute_decompose(e1(), g, {2, 2, 100}, exact);
    REQUIRE(brute.minus.size() >= 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(brute.minus[i].b - seq.steps[i].b) <= g.step * (1 + 1e-9));
        CHECK(std::abs(brute.minus[i].m - seq.steps[i].m) <= g.step * (1 + 1e-9));
    }

    Environment up = one_sided(SamplePath{{0, 0}, {5, 5}});
    const auto mono = valley_sequence(up, Side::right, 2, 1);
    REQUIRE(mono.steps.size() == 1);
    CHECK(mono.steps[0].b == 2);
    CHECK(mono.steps[0].m == 0);

    const auto none = valley_sequence(env, Side::right, 50, 3);
    CHECK(none.steps.empty());
    CHECK(none.truncated);
}

TEST_CASE("a_point") {
    Environment env = one_sided(e1());
    CHECK(a_point(env, Side::right, 1, 3, 0) == 0);
    CHECK(a_point(env, Side::right, 1, 2, 0) == doctest::Approx(1.0 / 3));
    CHECK(a_point(env, Side::right, 1, 0, 0) == 1);
    CHECK(a_point(env, Side::right, 3, 1, 2.5) == doctest::Approx(2 + 5.0 / 6));
    CHECK(a_point(env, Side::right, 3, 1, 2.9) == 2.9);  // clamp
    CHECK_THROWS_AS(a_point(env, Side::right, 7, 1, 0), DomainError);
}

TEST_CASE("plus_valley") {
    Environment env = one_sided(e1());
    const auto p = plus_valley(env, Side::right, Thresholds{2, 3, 4});
    REQUIRE(p);
    CHECK(p->c == 2.0);
    CHECK(p->m == 1);
    CHECK(p->b == 1.5);
    CHECK(p->a == 0);

    Environment vee = one_sided(SamplePath{{0, 0}, {1, -5}, {2, 0}});
    const auto q = plus_valley(vee, Side::right, Thresholds{2, 3, 4});
    REQUIRE(q);
    CHECK(q->c == doctest::Approx(1.8));
    CHECK(q->m == 1);

    CHECK_FALSE(plus_valley(env, Side::right, Thresholds{2, 3, 40}));
    CHECK_THROWS_AS(plus_valley(env, Side::right, Thresholds{0, 3, 4}), InvalidConfig);
}

TEST_CASE("exp_integral") {
    Environment flat = Environment::zero(0.1);
    flat.ensure(Side::right, 1);
    CHECK(exp_integral(flat, Side::right, 0, 1, 0.3).value == doctest::Approx(1.0).epsilon(1e-14));

    const auto i = exp_integral(e1(), 1, 1.5, 1);
    CHECK(i.value == doctest::Approx((1 - std::exp(-2.0)) / 4).epsilon(1e-14));
    const auto riemann = grid::riemann([](double x) { return std::exp(-e1().at(x) - 3); }, 1, 1.5, 100000);
    CHECK(i.value == doctest::Approx(riemann).epsilon(1e-8));

    const auto whole = exp_integral(e1(), 0, 4, 3);
    const auto r2 = grid::riemann([](double x) { return std::exp(-e1().at(x) - 5); }, 0, 4, 400000);
    CHECK(whole.value == doctest::Approx(r2).epsilon(1e-8));

    const auto empty = exp_integral(e1(), 2, 1, 1);
    CHECK(empty.empty_interval);
    CHECK(empty.value == 0);

    // far past double range in linear space: the log stays finite
    const SamplePath deep{{0, 0}, {1, -800}, {2, 0}};
    const auto big = exp_integral(deep, 0, 2, 0);
    CHECK(std::isfinite(big.log_value));
    CHECK(big.log_value == doctest::Approx(800 + std::log(2.0 / 800)).epsilon(1e-12));
}

TEST_CASE("ladder_sequence") {
    Environment env = one_sided(SamplePath{{0, 0}, {1, -4}, {2, 3}, {3, -4.5}});
    const auto lad = ladder_sequence(env, Side::right, 3);
    REQUIRE(lad.n() >= 1);
    CHECK(lad.truncated);
    const auto& r = lad.rungs[1];
    CHECK(r.beta == doctest::Approx(1 + 2.0 / 7));
    CHECK(r.mu == 1);
    CHECK(r.gamma == doctest::Approx(2 + 7 / 7.5));
    CHECK(r.top == 2);
    CHECK(r.height == 7);
    CHECK(r.eta == doctest::Approx(1 + 2.0 / 7));
    CHECK(lad.rungs[0].height == 2);

    Environment mono = one_sided(SamplePath{{0, 0}, {5, -5}});
    const auto m = ladder_sequence(mono, Side::right, 3);
    CHECK(m.n() == 0);
    CHECK(m.truncated);
}

TEST_CASE("localization windows") {
    const Interval w = valley_window(e1(), 1.0 / 3, 1, 1.5, std::exp(-1.0));
    CHECK(w.lo == doctest::Approx(2.0 / 3));
    CHECK(w.hi == doctest::Approx(1.25));
    const Interval tight = valley_window(e1(), 1.0 / 3, 1, 1.5, 1 - 1e-12);
    CHECK(tight.hi - tight.lo < 1e-9);
    CHECK_THROWS_AS(valley_window(e1(), 0, 1, 1.5, 1.0), InvalidConfig);
    CHECK(fixed_half_width(8, 0.5) == doctest::Approx(std::pow(std::log(8.0), 4.5)));
    CHECK(fixed_half_width(8, 0.5) == doctest::Approx(26.97).epsilon(1e-3));

    const auto merged = merge_intervals({{3, 4, "c"}, {0, 1, "a"}, {0.5, 2, "b"}});
    REQUIRE(merged.size() == 2);
    CHECK(merged[0].hi == 2);
}

TEST_CASE("localization sets in two-sided coordinates") {
    Environment env = Environment::fixed(e1(), e1());
    ValleyDecomposition right = decompose(env, Side::right, Thresholds{2, 2, 4}, 1);
    ValleyDecomposition left = decompose(env, Side::left, Thresholds{2, 2, 4}, 1);
    const auto sets = localization_sets(env, right, left, 8, std::exp(-1.0), WidthMode::valley);
    REQUIRE(sets.size() == 4);
    CHECK(sets[0].lo == doctest::Approx(2.0 / 3));
    CHECK(sets[0].hi == doctest::Approx(1.25));
    CHECK(sets[2].lo == doctest::Approx(-1.25));
    CHECK(sets[2].hi == doctest::Approx(-2.0 / 3));
    CHECK(sets[2].label == "hat_m-");
    const auto fixed = localization_sets(env, right, left, 8, 0.1, WidthMode::fixed, 0.5);
    CHECK(fixed[1].hi - fixed[1].lo == doctest::Approx(2 * fixed_half_width(8, 0.5)));
}

TEST_CASE("gamma events: clause breakdown on a hand-built environment") {
    const SamplePath side = stretched_side();
    Environment env = Environment::fixed(side, side);
    const ValleyParams p{2, 0.2, 0.2, 0.2};
    const GammaReport g = gamma_events(env, p);
    CHECK_FALSE(g.indeterminate());
    CHECK(*g.right.g1());
    CHECK_FALSE(*g.right.g2());
    CHECK_FALSE(*g.gamma);
    for (const auto& c : g.right.gamma2) {
        INFO(c.name);
        REQUIRE(c.holds.has_value());
        CHECK(*c.holds == (c.name != "b3_bound"));
    }
    const auto failed = g.failed_clauses();
    CHECK(std::count(failed.begin(), failed.end(), "b3_bound") == 1);
    CHECK(std::count(failed.begin(), failed.end(), "hat_b3_bound") == 1);
    // c+ lies beyond b2 here
    CHECK_FALSE(*g.right.g3());

    const auto j = to_json(g);
    CHECK(j["right"]["gamma2"]["b3_bound"] == false);
    CHECK(j["gamma"] == false);
}

TEST_CASE("gamma events: truncated decomposition is indeterminate") {
    const SamplePath short_side{{0, 0}, {1, -1}, {2, 0.5}};
    Environment env = Environment::fixed(short_side, short_side);
    const GammaReport g = gamma_events(env, ValleyParams{6, 1, 1, 1});
    CHECK(g.indeterminate());
    CHECK_FALSE(g.right.g1().has_value());
}

TEST_CASE("gamma events on sampled environments: G3 implies G1 clause-wise") {
    int checked = 0, g3_true = 0;
    for (int i = 0; i < 200; ++i) {
        Environment env = Environment::brownian({0.05, 0.0, derive_seed(31, i, "env"), 1.0});
        const GammaReport g = gamma_events(env, ValleyParams{6, 1, 1, 1});
        for (const SideGamma* s : {&g.right, &g.left}) {
            const Verdict c2 = s->gamma3[0].holds;
            const Verdict c3 = s->gamma1[0].holds;
            if (c2.has_value() && *c2) CHECK((c3.has_value() && *c3));
            if (s->g3().has_value() && *s->g3()) {
                ++g3_true;
                CHECK((s->g1().has_value() && *s->g1()));
            }
            ++checked;
        }
    }
    CHECK(checked == 400);
    CHECK(g3_true > 0);
}

TEST_CASE("point operations agree with dense-grid scans on random environments") {
    const Thresholds th{2.0, 2.5, 3.5};
    int compared = 0;
    for (int i = 0; i < 100; ++i) {
        const SamplerConfig sc{0.05, derive_seed(77, i, "brute"), 150.0};
        const SamplePath w = sample_brownian(sc, false);
        Environment env = Environment::fixed(w, SamplePath{{0, 0}, {1, 0}});
        const auto d = decompose(env, Side::right, th, 3);
        const auto g = grid::refine(w, 10);
        const double tol = g.step * (1 + 1e-9);
        const auto b = brute_decompose(w, g, th, d);
        // the brute scan runs one stage past the truncation point only if it finds more
        REQUIRE(b.minus.size() >= d.minus.size());
        if (d.minus.size() < 3) CHECK(b.minus.size() == d.minus.size());
        for (std::size_t k = 0; k < d.minus.size(); ++k) {
            CHECK(std::abs(d.minus[k].b - b.minus[k].b) <= tol);
            CHECK(std::abs(d.minus[k].m - b.minus[k].m) <= tol);
            CHECK(std::abs(d.minus[k].a - b.minus[k].a) <= tol);
        }
        REQUIRE(d.plus.has_value() == b.plus.has_value());
        if (d.plus) {
            CHECK(std::abs(d.plus->c - b.plus->c) <= tol);
            CHECK(std::abs(d.plus->m - b.plus->m) <= tol);
            CHECK(std::abs(d.plus->b - b.plus->b) <= tol);
            CHECK(std::abs(d.plus->a - b.plus->a) <= tol);

            // valley window around m+
            const double delta = 0.3;
            const Interval win = valley_window(w, d.plus->a, d.plus->m, d.plus->b, delta);
            const std::size_t ai = index_of(g, b.plus->a), mi = index_of(g, b.plus->m);
            const std::size_t bi = *grid::first_index(g, mi, g.x.size() - 1, g.w[mi] + th.depth, true);
            const double level = g.w[mi] + std::log(1 / delta);
            CHECK(std::abs(win.lo - g.x[*grid::first_index(g, ai, mi, level, false)]) <= tol);
            CHECK(std::abs(win.hi - g.x[*grid::last_index(g, mi, bi, level, false)]) <= tol);
        }

        // ladder
        const auto lad = ladder_sequence(env, Side::right, 4);
        for (int n = 1; n <= lad.n(); ++n) {
            const auto& prev = lad.rungs[n - 1];
            const auto& r = lad.rungs[n];
            const grid::Grid t = grid::tail(g, w, prev.gamma);
            auto beta = grid::oscillation(t, 0, prev.height);
            REQUIRE(beta);
            const std::size_t bi = index_of(t, *beta);
            const std::size_t mu = grid::argmin(t, 0, bi);
            CHECK(std::abs(r.beta - *beta) <= tol);
            CHECK(std::abs(r.mu - t.x[mu]) <= tol);
            // remaining points conditioned on the exact beta and mu
            const grid::Grid u = grid::tail(g, w, r.beta);
            const double wmu = w.at(r.mu);
            auto gam = grid::first_index(u, 0, u.x.size() - 1, wmu, false);
            REQUIRE(gam);
            CHECK(std::abs(r.gamma - u.x[*gam]) <= tol);
            const grid::Grid v = grid::tail(g, w, r.mu);
            const auto eta = grid::first_index(v, 0, v.x.size() - 1, wmu + 2, true);
            CHECK(std::abs(r.eta - v.x[*eta]) <= tol);
            std::size_t top = 0;
            for (std::size_t k = 0; k < u.x.size() && u.x[k] <= r.gamma; ++k)
                if (u.w[k] > u.w[top]) top = k;
            CHECK(std::abs(r.top - u.x[top]) <= tol);
            CHECK(r.height >= prev.height);
            ++compared;
        }
    }
    CHECK(compared > 100);
}

TEST_CASE("reflection symmetry of the decomposition") {
    for (int i = 0; i < 20; ++i) {
        Environment env = Environment::brownian({0.05, 0.0, derive_seed(5, i, "sym"), 10.0});
        Environment mirror = env.reflected();
        const ValleyParams p{6, 1, 1, 1};
        const auto left = decompose(env, Side::left, p);
        const auto right_of_mirror = decompose(mirror, Side::right, p);
        CHECK(to_json(left)["minus"] == to_json(right_of_mirror)["minus"]);
        CHECK(to_json(left)["plus"] == to_json(right_of_mirror)["plus"]);
    }
}

TEST_CASE("lazy extension preserves knots and matches the one-shot sampler") {
    Environment a = Environment::brownian({0.01, 0.0, 99, 1.0, 1'000'000, 100});
    const SamplePath before = a.side(Side::right);
    a.ensure(Side::right, 50);
    const SamplePath& after = a.side(Side::right);
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(after.position(i) == before.position(i));
        CHECK(after.value(i) == before.value(i));
    }
    const SamplePath direct = sample_brownian({0.01, 99, 50.0}, false);
    for (std::size_t i = 0; i < direct.size(); ++i) {
        REQUIRE(after.value(i) == direct.value(i));
    }
    CHECK(a.value(-0.5) == a.side(Side::left).at(0.5));

    Environment tiny = Environment::brownian({0.01, 0.0, 1, 0.1, 50, 16});
    CHECK_FALSE(tiny.ensure(Side::right, 10));
    CHECK(tiny.truncated(Side::right));
    CHECK_THROWS_AS(tiny.value(10), HorizonError);
}

TEST_CASE("depth of the first valley bottom is exponential") {
    const ValleyParams p{10, 1, 1, 1};
    std::vector<double> depth;
    for (int i = 0; i < 5000; ++i) {
        Environment env = Environment::brownian({0.02, 0.0, derive_seed(2024, i, "depth"), 1.0});
        const auto seq = valley_sequence(env, Side::right, p.depth(), 1);
        REQUIRE(seq.steps.size() == 1);
        depth.push_back(-env.side(Side::right).at(seq.steps[0].m));
    }
    const auto r = ks_test(depth, LawSpec::exponential(p.depth()), Alpha::p01);
    INFO(r.statistic, " vs ", r.threshold);
    CHECK(r.pass);
}
