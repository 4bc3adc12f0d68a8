#include "brox/valley.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "brox/errors.hpp"

namespace brox {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string show_inequality(const char* lhs, double value) {
    std::ostringstream msg;
    msg << lhs << " = " << value << " must be > 0";
    return msg.str();
}

}  // namespace

ValleyParams ValleyParams::from_c(double v, double c) {
    return ValleyParams{v, 2 * c + 8, c + 6, c + 2};
}

double ValleyParams::depth() const { return v - c1 * std::log(v); }
double ValleyParams::a_rise() const { return v - c2 * std::log(v); }
double ValleyParams::c_rise() const { return v + c3 * std::log(v); }

void ValleyParams::validate() const {
    std::vector<std::string> errors;
    if (!(v > 1) || !std::isfinite(v)) errors.push_back("v must be > 1");
    if (!(c1 > 0) || !(c2 > 0) || !(c3 > 0)) errors.push_back("c1, c2, c3 must be > 0");
    if (errors.empty()) {
        std::ostringstream lhs;
        lhs << "v - c1 log v (v=" << v << ", c1=" << c1 << ")";
        if (!(depth() > 0)) errors.push_back(show_inequality(lhs.str().c_str(), depth()));
        lhs.str("");
        lhs << "v - c2 log v (v=" << v << ", c2=" << c2 << ")";
        if (!(a_rise() > 0)) errors.push_back(show_inequality(lhs.str().c_str(), a_rise()));
    }
    if (errors.empty()) return;
    std::string all = "valley parameters: ";
    for (std::size_t i = 0; i < errors.size(); ++i) all += (i ? "; " : "") + errors[i];
    throw InvalidConfig(all);
}

ValleySequence valley_sequence(Environment& env, Side side, double depth_threshold, int count) {
    if (!(depth_threshold > 0)) throw InvalidConfig("valley_sequence: threshold must be positive");
    if (count < 1) throw InvalidConfig("valley_sequence: count must be >= 1");
    const SamplePath& path = env.side(side);
    const Extend extend = env.extender(side);
    ValleySequence out;
    double b_prev = 0.0;
    for (int i = 0; i < count; ++i) {
        auto b = oscillation_first_exceed(path, b_prev, depth_threshold,
                                          OscillationMode::above_running_min, extend);
        if (!b) {
            out.truncated = true;
            break;
        }
        out.steps.push_back({*b, argmin_on(path, b_prev, *b)});
        b_prev = *b;
    }
    return out;
}

double a_point(const Environment& env, Side side, double m, double rise, double floor) {
    const SamplePath& path = env.side(side);
    if (!path.contains(m)) throw DomainError("a_point: m outside the sampled domain");
    if (floor > m) throw DomainError("a_point: floor above m");
    auto x = last_at_or_above(path, path.at(m) + rise, floor, m);
    return x ? *x : floor;
}

std::optional<PlusValley> plus_valley(Environment& env, Side side, const Thresholds& th) {
    if (!(th.c_rise > 0) || !(th.depth > 0))
        throw InvalidConfig("plus_valley: thresholds must be positive");
    const SamplePath& path = env.side(side);
    auto c = oscillation_first_exceed(path, 0.0, th.c_rise, OscillationMode::above_running_min,
                                      env.extender(side));
    if (!c) return std::nullopt;
    PlusValley p;
    p.c = *c;
    p.m = argmin_on(path, 0.0, p.c);
    // W(c) - W(m) = c_rise exceeds the depth threshold, so b lies in [m, c].
    p.b = hitting_time(path, path.at(p.m) + th.depth, p.m).value_or(p.c);
    p.a = a_point(env, side, p.m, th.a_rise, 0.0);
    return p;
}

std::optional<PlusValley> plus_valley(Environment& env, Side side, const ValleyParams& p) {
    p.validate();
    return plus_valley(env, side, Thresholds::of(p));
}

ValleyDecomposition decompose(Environment& env, Side side, const Thresholds& th, int count) {
    ValleyDecomposition d;
    d.side = side;
    d.thresholds = th;
    const ValleySequence seq = valley_sequence(env, side, th.depth, count);
    double floor = 0.0;
    for (const auto& s : seq.steps) {
        d.minus.push_back({s.b, s.m, a_point(env, side, s.m, th.a_rise, floor)});
        floor = s.b;
    }
    d.plus = plus_valley(env, side, th);
    d.truncated = seq.truncated || !d.plus;
    return d;
}

ValleyDecomposition decompose(Environment& env, Side side, const ValleyParams& p, int count) {
    p.validate();
    ValleyDecomposition d = decompose(env, side, Thresholds::of(p), count);
    d.params = p;
    return d;
}

Verdict verdict_and(const std::vector<Verdict>& parts) {
    bool unknown = false;
    for (const auto& v : parts) {
        if (!v) {
            unknown = true;
        } else if (!*v) {
            return false;
        }
    }
    if (unknown) return std::nullopt;
    return true;
}

namespace {

Verdict all_of(const std::vector<Clause>& clauses) {
    std::vector<Verdict> parts;
    for (const auto& c : clauses) parts.push_back(c.holds);
    return verdict_and(parts);
}

}  // namespace

Verdict SideGamma::g1() const { return all_of(gamma1); }
Verdict SideGamma::g2() const { return all_of(gamma2); }
Verdict SideGamma::g3() const { return all_of(gamma3); }

SideGamma side_gamma(const Environment& env, const ValleyDecomposition& d, const ValleyParams& p) {
    const SamplePath& w = env.side(d.side);
    const double v = p.v;
    const double lv = std::log(v);
    const auto& mv = d.minus;
    const bool has1 = mv.size() >= 1, has2 = mv.size() >= 2, has3 = mv.size() >= 3;
    const std::optional<PlusValley>& pl = d.plus;
    // b points not found lie beyond the sampled extent.
    const double extent = w.back();

    auto b_at_least = [&](std::size_t i, double x) -> Verdict {
        // c+ <= b_i
        if (mv.size() > i) return x <= mv[i].b;
        if (x <= extent) return true;
        return std::nullopt;
    };

    SideGamma g;
    Verdict ridge;
    if (pl) ridge = min_on(w, pl->b, pl->c) - w.at(pl->m) >= (p.c1 + p.c3) * lv;
    Verdict c_before_b3, c_before_b2;
    if (pl) {
        c_before_b3 = b_at_least(2, pl->c);
        c_before_b2 = b_at_least(1, pl->c);
    }
    g.gamma1 = {{"c_before_b3", c_before_b3}, {"plus_ridge", ridge}};
    g.gamma3 = {{"c_before_b2", c_before_b2}, {"plus_ridge", ridge}};

    Verdict b3_bound;
    if (has3) {
        b3_bound = mv[2].b <= std::pow(v, 6);
    } else if (extent >= std::pow(v, 6)) {
        b3_bound = false;
    }
    auto pre_min = [&](const MinusValley& x) {
        const double lo = std::max(x.m - lv, x.a);
        return max_on(w, lo, x.m) - w.at(x.m) <= 2 * lv;
    };
    Verdict m1_depth, m2_depth, gap1, gap2, pre1, pre2;
    if (has1) {
        m1_depth = w.at(mv[0].m) >= -v * v;
        gap1 = mv[0].m - mv[0].a >= 1 / (v * v);
        pre1 = pre_min(mv[0]);
    }
    if (has2) {
        m2_depth = w.at(mv[1].m) - w.at(mv[0].b) >= -v * v;
        gap2 = mv[1].m - mv[1].a >= 1 / (v * v);
        pre2 = pre_min(mv[1]);
    }
    Verdict c_gap, c_end;
    if (pl) {
        c_gap = pl->c - pl->m >= v;
        const double lo = std::max(pl->c - lv, pl->m);
        c_end = w.at(pl->c) - min_on(w, lo, pl->c) <= 2 * lv;
    }
    g.gamma2 = {{"b3_bound", b3_bound},
                {"m1_depth", m1_depth},
                {"m2_depth", m2_depth},
                {"m1_a1_gap", gap1},
                {"m2_a2_gap", gap2},
                {"c_m_gap", c_gap},
                {"c_end_oscillation", c_end},
                {"m1_pre_oscillation", pre1},
                {"m2_pre_oscillation", pre2}};
    return g;
}

GammaReport gamma_events(const Environment& env, const ValleyDecomposition& right,
                         const ValleyDecomposition& left, const ValleyParams& p) {
    GammaReport r;
    r.params = p;
    r.right = side_gamma(env, right, p);
    r.left = side_gamma(env, left, p);
    r.gamma = verdict_and({r.right.g1(), r.right.g2(), r.left.g1(), r.left.g2()});
    r.gamma_prime = verdict_and({r.right.g3(), r.right.g2(), r.left.g3(), r.left.g2()});
    return r;
}

GammaReport gamma_events(Environment& env, const ValleyParams& p) {
    p.validate();
    const ValleyDecomposition right = decompose(env, Side::right, p, 3);
    const ValleyDecomposition left = decompose(env, Side::left, p, 3);
    return gamma_events(env, right, left, p);
}

std::vector<std::string> GammaReport::failed_clauses() const {
    std::vector<std::string> out;
    auto collect = [&](const SideGamma& g, const char* prefix) {
        for (const auto* group : {&g.gamma1, &g.gamma2, &g.gamma3})
            for (const auto& c : *group)
                if (c.holds.has_value() && !*c.holds) out.push_back(std::string(prefix) + c.name);
    };
    collect(right, "");
    collect(left, "hat_");
    return out;
}

ExpIntegral exp_integral(const SamplePath& path, double a, double b, double m) {
    ExpIntegral out;
    if (a > b) {
        out.empty_interval = true;
        out.log_value = -kInf;
        return out;
    }
    if (!path.contains(a) || !path.contains(b) || !path.contains(m))
        throw DomainError("exp_integral: interval outside the sampled domain");
    const double wm = path.at(m);
    if (a == b) {
        out.log_value = -kInf;
        return out;
    }
    // Log of each segment's contribution, then a scaled compensated sum.
    std::vector<double> logs;
    auto add_segment = [&](double x0, double w0, double x1, double w1) {
        const double u0 = wm - w0, u1 = wm - w1;
        const double hi = std::max(u0, u1);
        const double d = std::abs(u1 - u0);
        double factor = 0.0;  // log of (1 - e^-d) / d
        if (d > 1e-12) factor = std::log(-std::expm1(-d) / d);
        logs.push_back(std::log(x1 - x0) + hi + factor);
    };
    double x0 = a;
    double w0 = path.at(a);
    const auto pos = path.positions();
    std::size_t j = static_cast<std::size_t>(std::upper_bound(pos.begin(), pos.end(), a) - pos.begin());
    while (x0 < b) {
        double x1, w1;
        if (j < path.size() && path.position(j) < b) {
            x1 = path.position(j);
            w1 = path.value(j);
            ++j;
        } else {
            x1 = b;
            w1 = path.at(b);
        }
        add_segment(x0, w0, x1, w1);
        x0 = x1;
        w0 = w1;
    }
    const double top = *std::max_element(logs.begin(), logs.end());
    double sum = 0.0, comp = 0.0;  // Neumaier
    for (double l : logs) {
        const double term = std::exp(l - top);
        const double t = sum + term;
        if (std::abs(sum) >= std::abs(term)) {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    out.log_value = top + std::log(sum + comp);
    out.value = std::exp(out.log_value);
    return out;
}

ExpIntegral exp_integral(const Environment& env, Side side, double a, double b, double m) {
    return exp_integral(env.side(side), a, b, m);
}

LadderSequence ladder_sequence(Environment& env, Side side, int n_max) {
    if (n_max < 1) throw InvalidConfig("ladder_sequence: n_max must be >= 1");
    const SamplePath& w = env.side(side);
    const Extend extend = env.extender(side);
    LadderSequence out;
    out.side = side;
    out.rungs.push_back(LadderRung{0.0, 0.0, 0.0, 0.0, 0.0, 2.0});
    for (int n = 0; n < n_max; ++n) {
        const LadderRung prev = out.rungs.back();
        auto beta = oscillation_first_exceed(w, prev.gamma, prev.height,
                                             OscillationMode::above_running_min, extend);
        if (!beta) {
            out.truncated = true;
            break;
        }
        LadderRung r;
        r.beta = *beta;
        r.mu = argmin_on(w, prev.gamma, r.beta);
        const double wmu = w.at(r.mu);
        auto gamma = hitting_time(w, wmu, r.beta, extend);
        if (!gamma) {
            out.truncated = true;
            break;
        }
        r.gamma = *gamma;
        r.eta = hitting_time(w, wmu + 2.0, r.mu).value_or(r.beta);
        r.top = argmax_on(w, r.beta, r.gamma);
        r.height = w.at(r.top) - wmu;
        out.rungs.push_back(r);
    }
    return out;
}

Interval valley_window(const SamplePath& path, double a, double m, double b, double delta) {
    if (!(delta > 0 && delta < 1)) throw InvalidConfig("valley_window: delta must lie in (0, 1)");
    const double level = path.at(m) + std::log(1.0 / delta);
    Interval out;
    out.lo = first_at_or_below(path, level, a, m).value_or(m);
    out.hi = last_at_or_below(path, level, m, b).value_or(m);
    return out;
}

double fixed_half_width(double v, double eps) {
    if (!(v > 1)) throw InvalidConfig("fixed_half_width: v must be > 1");
    if (!(eps > 0)) throw InvalidConfig("fixed_half_width: eps must be positive");
    return std::pow(std::log(v), 4.0 + eps);
}

std::vector<Interval> localization_sets(const Environment& env, const ValleyDecomposition& right,
                                        const ValleyDecomposition& left, double v, double delta,
                                        WidthMode mode, double eps) {
    if (!(delta > 0 && delta < 1)) throw InvalidConfig("localization_sets: delta must lie in (0, 1)");
    std::vector<Interval> out;
    for (const ValleyDecomposition* d : {&right, &left}) {
        if (d->minus.empty() || !d->plus)
            throw DomainError(std::string("localization_sets: ") + to_string(d->side) +
                              " decomposition incomplete");
        const SamplePath& w = env.side(d->side);
        const double sign = d->side == Side::right ? 1.0 : -1.0;
        const std::string hat = d->side == Side::right ? "" : "hat_";
        struct Target {
            double a, m, b;
            std::string label;
        };
        const Target targets[2] = {{d->minus[0].a, d->minus[0].m, d->minus[0].b, hat + "m-"},
                                   {d->plus->a, d->plus->m, d->plus->b, hat + "m+"}};
        for (const auto& t : targets) {
            Interval local;
            if (mode == WidthMode::valley) {
                local = valley_window(w, t.a, t.m, t.b, delta);
            } else {
                const double h = fixed_half_width(v, eps);
                local = {t.m - h, t.m + h, ""};
            }
            Interval iv;
            iv.lo = sign > 0 ? local.lo : -local.hi;
            iv.hi = sign > 0 ? local.hi : -local.lo;
            iv.label = t.label;
            out.push_back(iv);
        }
    }
    return out;
}

std::vector<Interval> localization_sets(Environment& env, const ValleyParams& p, double delta,
                                        WidthMode mode, double eps) {
    p.validate();
    const ValleyDecomposition right = decompose(env, Side::right, p, 1);
    const ValleyDecomposition left = decompose(env, Side::left, p, 1);
    return localization_sets(env, right, left, p.v, delta, mode, eps);
}

std::vector<Interval> merge_intervals(std::vector<Interval> parts) {
    std::sort(parts.begin(), parts.end(),
              [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
    std::vector<Interval> out;
    for (auto& p : parts) {
        if (!out.empty() && p.lo <= out.back().hi) {
            out.back().hi = std::max(out.back().hi, p.hi);
            if (!p.label.empty()) out.back().label += "," + p.label;
        } else {
            out.push_back(p);
        }
    }
    return out;
}

namespace {

nlohmann::json verdict_json(const Verdict& v) {
    if (!v) return nullptr;
    return *v;
}

nlohmann::json clauses_json(const std::vector<Clause>& clauses) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& c : clauses) j[c.name] = verdict_json(c.holds);
    return j;
}

nlohmann::json side_json(const SideGamma& g) {
    return {{"gamma1", clauses_json(g.gamma1)},
            {"gamma2", clauses_json(g.gamma2)},
            {"gamma3", clauses_json(g.gamma3)},
            {"g1", verdict_json(g.g1())},
            {"g2", verdict_json(g.g2())},
            {"g3", verdict_json(g.g3())}};
}

nlohmann::json params_json(const ValleyParams& p) {
    return {{"v", p.v}, {"c1", p.c1}, {"c2", p.c2}, {"c3", p.c3}};
}

}  // namespace

nlohmann::json to_json(const ValleyDecomposition& d) {
    nlohmann::json j;
    j["side"] = to_string(d.side);
    j["thresholds"] = {{"depth", d.thresholds.depth},
                       {"a_rise", d.thresholds.a_rise},
                       {"c_rise", d.thresholds.c_rise}};
    j["params"] = d.params ? params_json(*d.params) : nlohmann::json(nullptr);
    j["minus"] = nlohmann::json::array();
    for (const auto& m : d.minus) j["minus"].push_back({{"b", m.b}, {"m", m.m}, {"a", m.a}});
    if (d.plus) {
        j["plus"] = {{"c", d.plus->c}, {"m", d.plus->m}, {"b", d.plus->b}, {"a", d.plus->a}};
    } else {
        j["plus"] = nullptr;
    }
    j["truncated"] = d.truncated;
    return j;
}

nlohmann::json to_json(const GammaReport& g) {
    return {{"params", params_json(g.params)},
            {"gamma", verdict_json(g.gamma)},
            {"gamma_prime", verdict_json(g.gamma_prime)},
            {"indeterminate", g.indeterminate()},
            {"right", side_json(g.right)},
            {"left", side_json(g.left)},
            {"failed_clauses", g.failed_clauses()}};
}

nlohmann::json to_json(const LadderSequence& l) {
    nlohmann::json rungs = nlohmann::json::array();
    for (const auto& r : l.rungs)
        rungs.push_back({{"beta", r.beta},
                         {"mu", r.mu},
                         {"gamma", r.gamma},
                         {"eta", r.eta},
                         {"top", r.top},
                         {"height", r.height}});
    return {{"side", to_string(l.side)}, {"rungs", rungs}, {"truncated", l.truncated}, {"n", l.n()}};
}

}  // namespace brox
