#include "brox/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "brox/errors.hpp"

namespace brox {

namespace {

// int_0^len e^{sign (w0 + kappa y)} dy
long double segment_integral(long double w0, long double kappa, long double len, int sign) {
    const long double a = sign * w0;
    const long double k = sign * kappa;
    if (len <= 0) return 0;
    if (std::fabs(k * len) < 1e-12L) return std::exp(a) * len * (1 + k * len / 2);
    return std::exp(a) * std::expm1(k * len) / k;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace

long long bin_index(double x, double bin_width) {
    return static_cast<long long>(std::floor(x / bin_width + 0.5));
}

// ---------------------------------------------------------------------------
// ScaleTable

void ScaleTable::sync(Side s) {
    const SamplePath& p = env_->side(s);
    SideTable& t = table(s);
    if (t.cum.empty()) t.cum.push_back(0);
    t.cum.reserve(p.size());
    for (std::size_t k = t.cum.size(); k < p.size(); ++k) {
        const long double len = p.position(k) - p.position(k - 1);
        const long double w0 = p.value(k - 1);
        const long double kappa = (p.value(k) - w0) / len;
        t.cum.push_back(t.cum[k - 1] + segment_integral(w0, kappa, len, 1));
    }
}

long double ScaleTable::side_scale(Side s, double u) {
    if (u == 0) return 0;
    if (!env_->ensure(s, u)) throw HorizonError("environment budget exhausted at position " + fmt(u));
    sync(s);
    const SamplePath& p = env_->side(s);
    const std::size_t k = p.segment_index(u);
    const long double len = p.position(k + 1) - p.position(k);
    const long double kappa = (p.value(k + 1) - p.value(k)) / len;
    return table(s).cum[k] + segment_integral(p.value(k), kappa, u - p.position(k), 1);
}

long double ScaleTable::scale(double x) {
    return x >= 0 ? side_scale(Side::right, x) : -side_scale(Side::left, -x);
}

ScaleTable::Point ScaleTable::inverse(long double s) {
    const Side side = s >= 0 ? Side::right : Side::left;
    const long double target = std::fabs(s);
    SideTable& t = table(side);
    sync(side);
    while (t.cum.back() < target) {
        if (!env_->grow(side)) throw HorizonError("environment budget exhausted inverting the scale");
        sync(side);
    }
    const SamplePath& p = env_->side(side);
    const std::size_t last = t.cum.size() - 2;  // last segment
    std::size_t k = std::min(t.hint, last);
    auto owns = [&](std::size_t i) { return t.cum[i] <= target && (target < t.cum[i + 1] || i == last); };
    if (!owns(k)) {
        bool found = false;
        for (int d = 1; d <= 4 && !found; ++d) {
            if (k + d <= last && owns(k + d)) { k += d; found = true; }
            else if (k >= static_cast<std::size_t>(d) && owns(k - d)) { k -= d; found = true; }
        }
        if (!found) {
            auto it = std::upper_bound(t.cum.begin(), t.cum.end(), target);
            k = std::min<std::size_t>(last, static_cast<std::size_t>(it - t.cum.begin()) - 1);
        }
    }
    t.hint = k;
    const long double len = p.position(k + 1) - p.position(k);
    const long double w0 = p.value(k);
    const long double kappa = (p.value(k + 1) - w0) / len;
    const long double rem = target - t.cum[k];
    long double delta;
    if (std::fabs(kappa) < 1e-15L) {
        delta = rem * std::exp(-w0);
    } else {
        const long double arg = std::max(kappa * rem * std::exp(-w0), -1 + 1e-18L);
        delta = std::log1p(arg) / kappa;
    }
    delta = std::clamp(delta, 0.0L, len);
    const double u = static_cast<double>(p.position(k) + delta);
    const double w = static_cast<double>(w0 + kappa * delta);
    return {side == Side::right ? u : -u, w};
}

long double ScaleTable::exp_integral(double lo, double hi, int sign) {
    if (hi <= lo) return 0;
    auto side_part = [&](Side s, double ua, double ub) -> long double {
        if (ub <= ua) return 0;
        if (!env_->ensure(s, ub)) throw HorizonError("environment budget exhausted at position " + fmt(ub));
        const SamplePath& p = env_->side(s);
        long double sum = 0;
        for (std::size_t k = p.segment_index(ua); k + 1 < p.size() && p.position(k) < ub; ++k) {
            const double x0 = p.position(k), x1 = p.position(k + 1);
            const double a = std::max(ua, x0), b = std::min(ub, x1);
            if (b <= a) continue;
            const long double kappa = (p.value(k + 1) - p.value(k)) / static_cast<long double>(x1 - x0);
            const long double wa = p.value(k) + kappa * (a - x0);
            sum += segment_integral(wa, kappa, b - a, sign);
        }
        return sum;
    };
    long double total = 0;
    if (hi > 0) total += side_part(Side::right, std::max(lo, 0.0), hi);
    if (lo < 0) total += side_part(Side::left, std::max(-hi, 0.0), -lo);
    return total;
}

double scale(Environment& env, double x) { return static_cast<double>(ScaleTable(env).scale(x)); }

double scale_inverse(Environment& env, double s) { return ScaleTable(env).inverse(s).x; }

// ---------------------------------------------------------------------------
// Local time fields

const char* to_string(Estimator e) { return e == Estimator::formula ? "formula" : "direct"; }

void DriverConfig::validate() const {
    if (!(dt > 0) || !std::isfinite(dt)) throw InvalidConfig("driver dt must be > 0, got " + fmt(dt));
    if (max_steps == 0) throw InvalidConfig("driver max_steps must be > 0");
}

double LocalTimeField::total() const {
    double sum = 0;
    for (const auto& b : bins) sum += b.value * b.width;
    return sum;
}

double LocalTimeField::sup() const {
    double m = 0;
    for (const auto& b : bins) m = std::max(m, b.value);
    return m;
}

double LocalTimeField::at(double x) const {
    if (bins.empty()) return 0;
    const long long j = bin_index(x, bin_width) - bin_index(bins.front().center, bin_width);
    if (j < 0 || j >= static_cast<long long>(bins.size())) return 0;
    return bins[static_cast<std::size_t>(j)].value;
}

void LocalTimeField::write_csv(std::ostream& out) const {
    out << "x_center,width,L\n";
    out.precision(17);
    for (const auto& b : bins) out << b.center << ',' << b.width << ',' << b.value << '\n';
}

// ---------------------------------------------------------------------------
// DiffusionRealization

DiffusionRealization::DiffusionRealization(Environment env, DriverConfig config)
    : env_(std::move(env)),
      table_(env_),
      cfg_(config),
      rng_(derive_seed(config.seed, 0, "driver")),
      s_{0.0},
      b_{0.0L},
      x_{0.0},
      w_{0.0},
      t_{0.0} {
    cfg_.validate();
}

void DiffusionRealization::step() {
    const double w = w_.back();
    const double ds = cfg_.dt * std::exp(2 * w);
    if (!std::isfinite(ds) || ds <= 0)
        throw DomainError("driver step not representable at W = " + fmt(w));
    const long double b = b_.back() + static_cast<long double>(std::sqrt(ds) * normal_(rng_));
    const ScaleTable::Point p = table_.inverse(b);
    const double dT = cfg_.dt / 2 * (1 + std::exp(2 * (w - p.w)));
    s_.push_back(s_.back() + ds);
    ds_.push_back(ds);
    b_.push_back(b);
    x_.push_back(p.x);
    w_.push_back(p.w);
    t_.push_back(t_.back() + dT);
}

bool DiffusionRealization::advance_to_time(double t) {
    while (t_.back() < t) {
        if (budget_exhausted()) return false;
        step();
    }
    return true;
}

bool DiffusionRealization::advance_to_driver_time(double s) {
    while (s_.back() < s) {
        if (budget_exhausted()) return false;
        step();
    }
    return true;
}

std::size_t DiffusionRealization::step_at_time(double t) {
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const std::size_t idx = static_cast<std::size_t>(it - t_.begin());
    return std::min(idx == 0 ? 0 : idx - 1, steps() - 1);
}

double DiffusionRealization::value(double t) {
    if (t < 0) throw DomainError("negative time " + fmt(t));
    if (t == 0) return 0;
    if (!advance_to_time(t)) throw HorizonError("step budget exhausted before time " + fmt(t));
    const std::size_t k = step_at_time(t);
    const double f = (t - t_[k]) / (t_[k + 1] - t_[k]);
    if (f <= 0) return x_[k];
    if (f >= 1) return x_[k + 1];
    return table_.inverse(b_[k] + f * (b_[k + 1] - b_[k])).x;
}

double DiffusionRealization::time_change(double s) {
    if (s < 0) throw DomainError("negative driver time " + fmt(s));
    if (s == 0) return 0;
    if (!advance_to_driver_time(s)) throw HorizonError("step budget exhausted before driver time " + fmt(s));
    const auto it = std::upper_bound(s_.begin(), s_.end(), s);
    const std::size_t k = std::min(static_cast<std::size_t>(it - s_.begin()) - 1, steps() - 1);
    const double f = std::clamp((s - s_[k]) / ds_[k], 0.0, 1.0);
    return t_[k] + f * (t_[k + 1] - t_[k]);
}

double DiffusionRealization::time_change_inverse(double t) {
    if (t < 0) throw DomainError("negative time " + fmt(t));
    if (t == 0) return 0;
    if (!advance_to_time(t)) throw HorizonError("step budget exhausted before time " + fmt(t));
    const std::size_t k = step_at_time(t);
    const double f = (t - t_[k]) / (t_[k + 1] - t_[k]);
    return s_[k] + f * ds_[k];
}

double DiffusionRealization::driver(double s) {
    if (s < 0) throw DomainError("negative driver time " + fmt(s));
    if (s == 0) return 0;
    if (!advance_to_driver_time(s)) throw HorizonError("step budget exhausted before driver time " + fmt(s));
    const auto it = std::upper_bound(s_.begin(), s_.end(), s);
    const std::size_t k = std::min(static_cast<std::size_t>(it - s_.begin()) - 1, steps() - 1);
    const double f = std::clamp((s - s_[k]) / ds_[k], 0.0, 1.0);
    return static_cast<double>(b_[k] + f * (b_[k + 1] - b_[k]));
}

std::optional<double> DiffusionRealization::hitting_time(double x) {
    if (x == 0) return 0.0;
    const long double target = table_.scale(x);
    for (std::size_t k = 0;; ++k) {
        while (k + 1 >= s_.size()) {
            if (budget_exhausted()) return std::nullopt;
            step();
        }
        const long double d0 = b_[k] - target, d1 = b_[k + 1] - target;
        if (d0 == 0) return t_[k];
        if ((d0 < 0) != (d1 < 0) || d1 == 0) {
            const double f = static_cast<double>(d0 / (d0 - d1));
            return t_[k] + f * (t_[k + 1] - t_[k]);
        }
    }
}

long double DiffusionRealization::bin_edge_scale(long long j, double bin_width) {
    return table_.scale((static_cast<double>(j) - 0.5) * bin_width);
}

LocalTimeField DiffusionRealization::local_time_field(double t, double bin_width, Estimator estimator) {
    if (!(bin_width > 0)) throw InvalidConfig("bin width must be > 0, got " + fmt(bin_width));
    if (t < 0) throw DomainError("negative time " + fmt(t));
    if (!advance_to_time(t)) throw HorizonError("step budget exhausted before time " + fmt(t));

    LocalTimeField field;
    field.t = t;
    field.bin_width = bin_width;
    field.estimator = estimator;
    field.under_resolved = bin_width < 0.5 * std::sqrt(cfg_.dt);
    if (t == 0) return field;

    const std::size_t last = step_at_time(t);
    const double f_end = std::clamp((t - t_[last]) / (t_[last + 1] - t_[last]), 0.0, 1.0);
    const long double b_end = b_[last] + f_end * (b_[last + 1] - b_[last]);
    const double x_end = f_end >= 1 ? x_[last + 1] : table_.inverse(b_end).x;

    double xmin = x_end, xmax = x_end;
    for (std::size_t k = 0; k <= last; ++k) {
        xmin = std::min(xmin, x_[k]);
        xmax = std::max(xmax, x_[k]);
    }
    const long long j0 = bin_index(xmin, bin_width), j1 = bin_index(xmax, bin_width);
    std::vector<double> occ(static_cast<std::size_t>(j1 - j0 + 1), 0.0);

    if (estimator == Estimator::direct) {
        for (std::size_t k = 0; k <= last; ++k) {
            const double xa = x_[k];
            const double xb = k == last ? x_end : x_[k + 1];
            const double dur = k == last ? t - t_[k] : t_[k + 1] - t_[k];
            const double lo = std::min(xa, xb), hi = std::max(xa, xb);
            const long long ja = bin_index(lo, bin_width), jb = bin_index(hi, bin_width);
            if (ja == jb || hi == lo) {
                occ[static_cast<std::size_t>(bin_index(xa, bin_width) - j0)] += dur;
                continue;
            }
            for (long long j = ja; j <= jb; ++j) {
                const double e0 = std::max(lo, (static_cast<double>(j) - 0.5) * bin_width);
                const double e1 = std::min(hi, (static_cast<double>(j) + 0.5) * bin_width);
                if (e1 > e0) occ[static_cast<std::size_t>(j - j0)] += dur * (e1 - e0) / (hi - lo);
            }
        }
        for (long long j = j0; j <= j1; ++j)
            field.bins.push_back({static_cast<double>(j) * bin_width, bin_width,
                                  occ[static_cast<std::size_t>(j - j0)] / bin_width});
        return field;
    }

    std::vector<long double> edges;  // S at the lower edges of bins j0 .. j1 + 1
    edges.reserve(occ.size() + 1);
    for (long long j = j0; j <= j1 + 1; ++j) edges.push_back(bin_edge_scale(j, bin_width));
    for (std::size_t k = 0; k <= last; ++k) {
        const long double ba = b_[k];
        const long double bb = k == last ? b_end : b_[k + 1];
        const double dur = k == last ? f_end * ds_[k] : ds_[k];
        const double xa = x_[k];
        const double xb = k == last ? x_end : x_[k + 1];
        const long long ja = bin_index(std::min(xa, xb), bin_width);
        const long long jb = bin_index(std::max(xa, xb), bin_width);
        if (ja == jb || ba == bb) {
            occ[static_cast<std::size_t>(bin_index(xa, bin_width) - j0)] += dur;
            continue;
        }
        const long double lo = std::min(ba, bb), hi = std::max(ba, bb);
        for (long long j = ja; j <= jb; ++j) {
            const std::size_t i = static_cast<std::size_t>(j - j0);
            const long double e0 = std::max(lo, edges[i]);
            const long double e1 = std::min(hi, edges[i + 1]);
            if (e1 > e0) occ[i] += static_cast<double>(dur * (e1 - e0) / (hi - lo));
        }
    }
    for (long long j = j0; j <= j1; ++j) {
        const std::size_t i = static_cast<std::size_t>(j - j0);
        const double c = static_cast<double>(j) * bin_width;
        double value = 0;
        if (occ[i] > 0) {
            const long double width_s = edges[i + 1] - edges[i];
            const long double weight = table_.exp_integral(c - bin_width / 2, c + bin_width / 2, -1);
            value = static_cast<double>(occ[i] / width_s * weight / bin_width);
        }
        field.bins.push_back({c, bin_width, value});
    }
    return field;
}

double DiffusionRealization::occupation(double t, const std::vector<Interval>& set) {
    if (t < 0) throw DomainError("negative time " + fmt(t));
    if (t == 0 || set.empty()) return 0;
    if (!advance_to_time(t)) throw HorizonError("step budget exhausted before time " + fmt(t));
    const std::size_t last = step_at_time(t);
    const double x_end = value(t);
    double total = 0;
    for (std::size_t k = 0; k <= last; ++k) {
        const double xa = x_[k];
        const double xb = k == last ? x_end : x_[k + 1];
        const double dur = k == last ? t - t_[k] : t_[k + 1] - t_[k];
        const double lo = std::min(xa, xb), hi = std::max(xa, xb);
        for (const auto& iv : set) {
            if (hi == lo) {
                if (lo >= iv.lo && lo <= iv.hi) total += dur;
                continue;
            }
            const double e0 = std::max(lo, iv.lo), e1 = std::min(hi, iv.hi);
            if (e1 > e0) total += dur * (e1 - e0) / (hi - lo);
        }
    }
    return total;
}

double DiffusionRealization::max_position(double t) {
    const double x_end = value(t);
    if (t == 0) return 0;
    const std::size_t last = step_at_time(t);
    return std::max(x_end, *std::max_element(x_.begin(), x_.begin() + static_cast<long>(last) + 1));
}

double DiffusionRealization::min_position(double t) {
    const double x_end = value(t);
    if (t == 0) return 0;
    const std::size_t last = step_at_time(t);
    return std::min(x_end, *std::min_element(x_.begin(), x_.begin() + static_cast<long>(last) + 1));
}

std::optional<DiffusionRealization::Reach> DiffusionRealization::first_local_time_reach(
    const std::vector<double>& points, const std::vector<double>& levels, double bin_width) {
    if (points.size() != levels.size() || points.empty())
        throw InvalidConfig("need one level per target point");
    if (!(bin_width > 0)) throw InvalidConfig("bin width must be > 0, got " + fmt(bin_width));
    struct Target {
        long double lo, hi;
        double threshold;
        double occ = 0;
    };
    std::vector<Target> targets;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (levels[i] <= 0) return Reach{0, 0, i};
        const long long j = bin_index(points[i], bin_width);
        const long double lo = bin_edge_scale(j, bin_width), hi = bin_edge_scale(j + 1, bin_width);
        const double c = static_cast<double>(j) * bin_width;
        const long double weight = table_.exp_integral(c - bin_width / 2, c + bin_width / 2, -1);
        targets.push_back({lo, hi, static_cast<double>(levels[i] * (hi - lo) * bin_width / weight)});
    }
    for (std::size_t k = 0;; ++k) {
        while (k + 1 >= s_.size()) {
            if (budget_exhausted()) return std::nullopt;
            step();
        }
        const long double b0 = b_[k], b1 = b_[k + 1];
        const double ds = ds_[k];
        std::optional<Reach> best;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            Target& tg = targets[i];
            double u0, u1;
            if (b0 == b1) {
                if (b0 < tg.lo || b0 >= tg.hi) continue;
                u0 = 0;
                u1 = 1;
            } else {
                const double ua = static_cast<double>((tg.lo - b0) / (b1 - b0));
                const double ub = static_cast<double>((tg.hi - b0) / (b1 - b0));
                u0 = std::max(0.0, std::min(ua, ub));
                u1 = std::min(1.0, std::max(ua, ub));
                if (u1 <= u0) continue;
            }
            const double add = ds * (u1 - u0);
            if (tg.occ + add >= tg.threshold) {
                const double u = std::clamp(u0 + (tg.threshold - tg.occ) / ds, 0.0, 1.0);
                const Reach r{t_[k] + u * (t_[k + 1] - t_[k]), s_[k] + u * ds, i};
                if (!best || r.time < best->time) best = r;
            }
            tg.occ += add;
        }
        if (best) return best;
    }
}

std::optional<double> DiffusionRealization::inverse_local_time(double r, double y, double bin_width) {
    const auto reach = first_local_time_reach({y}, {r}, bin_width);
    if (!reach) return std::nullopt;
    return reach->time;
}

double DiffusionRealization::refined_time_change(std::size_t upto, int factor, std::uint64_t seed) {
    if (factor < 1) throw InvalidConfig("refinement factor must be >= 1");
    while (steps() < upto) {
        if (budget_exhausted()) throw HorizonError("step budget exhausted before step " + std::to_string(upto));
        step();
    }
    Rng rng(derive_seed(seed, 0, "bridge"));
    std::normal_distribution<double> normal;
    long double total = 0;
    for (std::size_t k = 0; k < upto; ++k) {
        const double h = ds_[k] / factor;
        long double b_prev = b_[k];
        double g_prev = std::exp(-2 * w_[k]);
        for (int i = 1; i <= factor; ++i) {
            long double b;
            double w;
            if (i == factor) {
                b = b_[k + 1];
                w = w_[k + 1];
            } else {
                const double rest = ds_[k] - (i - 1) * h;
                const long double mean = b_prev + (h / rest) * (b_[k + 1] - b_prev);
                const double sd = std::sqrt(h * (rest - h) / rest);
                b = mean + sd * normal(rng);
                w = table_.inverse(b).w;
            }
            const double g = std::exp(-2 * w);
            total += h / 2 * (g_prev + g);
            g_prev = g;
            b_prev = b;
        }
    }
    return static_cast<double>(total);
}

nlohmann::json DiffusionRealization::metadata() const {
    return {{"dt", cfg_.dt},
            {"seed", cfg_.seed},
            {"driver_seed", derive_seed(cfg_.seed, 0, "driver")},
            {"max_steps", cfg_.max_steps},
            {"steps", steps()},
            {"diffusion_time", t_.back()},
            {"driver_time", s_.back()},
            {"budget_exhausted", budget_exhausted()},
            {"environment_extent", {-env_.left_extent(), env_.right_extent()}}};
}

// ---------------------------------------------------------------------------
// Composite inverse local time and profile events

std::vector<std::pair<std::string, double>> sigma_targets(const ValleyDecomposition& right,
                                                          const ValleyDecomposition& left) {
    if (right.minus.empty() || !right.plus || left.minus.empty() || !left.plus)
        throw DomainError("decomposition incomplete: need m-_1 and m+ on both sides");
    return {{"m-", right.minus[0].m},
            {"m+", right.plus->m},
            {"hat_m-", -left.minus[0].m},
            {"hat_m+", -left.plus->m}};
}

std::optional<CompositeSigma> composite_sigma(DiffusionRealization& real, const ValleyDecomposition& right,
                                              const ValleyDecomposition& left, double r, double v,
                                              double bin_width) {
    const auto targets = sigma_targets(right, left);
    std::vector<double> points, levels;
    for (const auto& [label, x] : targets) {
        points.push_back(x);
        levels.push_back(r * std::exp(v));
    }
    const auto reach = real.first_local_time_reach(points, levels, bin_width);
    if (!reach) return std::nullopt;
    return CompositeSigma{reach->time, targets[reach->target].first, targets[reach->target].second};
}

Verdict ProfileEvents::get(const std::string& name) const {
    for (const auto& c : flags)
        if (c.name == name) return c.holds;
    throw DomainError("no profile event named " + name);
}

ProfileEvents profile_events(DiffusionRealization& real, double stop_time, const ValleyDecomposition& right,
                             const ValleyDecomposition& left, double r, double v, double delta,
                             double bin_width, Estimator estimator) {
    const LocalTimeField field = real.local_time_field(stop_time, bin_width, estimator);
    ScaleTable& table = real.scale_table();
    const double cap = delta * r * std::exp(v);

    // Bins whose centers lie in [lo, hi] (two-sided coordinates).
    auto each_bin = [&](double lo, double hi, auto&& pred) {
        const long long ja = static_cast<long long>(std::ceil(lo / bin_width - 1e-9));
        const long long jb = static_cast<long long>(std::floor(hi / bin_width + 1e-9));
        for (long long j = ja; j <= jb; ++j)
            if (!pred(static_cast<double>(j) * bin_width)) return false;
        return true;
    };

    ProfileEvents out;
    for (const ValleyDecomposition* d : {&right, &left}) {
        const bool is_left = d->side == Side::left;
        const std::string prefix = is_left ? "hat_" : "";
        const double sign = is_left ? -1.0 : 1.0;
        // [lo, hi] in the side's own coordinate, mapped to the two-sided line.
        auto span = [&](double lo, double hi) {
            return is_left ? std::pair{-hi, -lo} : std::pair{lo, hi};
        };
        for (int i = 1; i <= 2; ++i) {
            Verdict a, b;
            if (static_cast<int>(d->minus.size()) >= i) {
                const MinusValley& mv = d->minus[static_cast<std::size_t>(i - 1)];
                const double wm = real.env().value(sign * mv.m);
                const auto [lo, hi] = span(mv.a, mv.b);
                a = each_bin(lo, hi, [&](double c) {
                    const double weight = static_cast<double>(
                        table.exp_integral(c - bin_width / 2, c + bin_width / 2, -1));
                    const double expected = r * std::exp(v + wm) * weight / bin_width;
                    return std::fabs(field.at(c) / expected - 1) <= delta;
                });
                const double prev_b = i == 1 ? 0.0 : d->minus[static_cast<std::size_t>(i - 2)].b;
                const auto [blo, bhi] = span(prev_b, mv.a);
                // [b_{i-1}, a_i): drop the bin sitting on a_i itself.
                b = each_bin(blo, bhi, [&](double c) {
                    if (std::fabs(c - sign * mv.a) < 1e-9 * bin_width) return true;
                    return field.at(c) <= cap;
                });
            }
            out.flags.push_back({prefix + "A" + std::to_string(i), a});
            out.flags.push_back({prefix + "B" + std::to_string(i), b});
        }
        Verdict c, dd;
        if (d->plus) {
            const auto [lo, hi] = span(d->plus->b, d->plus->c);
            c = each_bin(lo, hi, [&](double x) { return field.at(x) <= cap; });
            dd = is_left ? real.min_position(stop_time) >= -d->plus->c
                         : real.max_position(stop_time) <= d->plus->c;
        }
        out.flags.push_back({prefix + "C", c});
        out.flags.push_back({prefix + "D", dd});
    }
    return out;
}

nlohmann::json to_json(const ProfileEvents& p) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& c : p.flags) j[c.name] = c.holds ? nlohmann::json(*c.holds) : nlohmann::json(nullptr);
    return j;
}

}  // namespace brox
