#include "brox/path.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "brox/errors.hpp"

namespace brox {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Position on [x0, x1] where the linear segment (x0,w0)-(x1,w1) takes `level`.
double cross(double x0, double w0, double x1, double w1, double level) {
    if (w1 == w0) return x0;
    return x0 + (x1 - x0) * ((level - w0) / (w1 - w0));
}

void require_in_domain(const SamplePath& path, double x, const char* what) {
    if (!path.contains(x)) {
        std::ostringstream msg;
        msg << what << ": position " << x << " outside path domain";
        if (!path.empty()) msg << " [" << path.front() << ", " << path.back() << "]";
        throw DomainError(msg.str());
    }
}

// Index of the first knot strictly to the right of x.
std::size_t next_knot(const SamplePath& path, double x) {
    const auto pos = path.positions();
    return static_cast<std::size_t>(std::upper_bound(pos.begin(), pos.end(), x) - pos.begin());
}

// Walks the path rightwards from `from`, handing each segment to `visit`
// until it returns a position. Extends the path when the scan runs out.
template <typename Visit>
std::optional<double> scan_right(const SamplePath& path, double from, const Extend& extend,
                                 Visit&& visit) {
    double x0 = from;
    double w0 = path.at(from);
    std::size_t j = next_knot(path, from);
    for (;;) {
        if (j >= path.size()) {
            if (!extend || !extend()) return std::nullopt;
            continue;
        }
        const double x1 = path.position(j);
        const double w1 = path.value(j);
        if (auto hit = visit(x0, w0, x1, w1)) return hit;
        x0 = x1;
        w0 = w1;
        ++j;
    }
}

}  // namespace

SamplePath::SamplePath(std::vector<double> positions, std::vector<double> values)
    : pos_(std::move(positions)), val_(std::move(values)) {
    if (pos_.size() != val_.size()) throw InvalidConfig("SamplePath: size mismatch");
    for (std::size_t i = 0; i < pos_.size(); ++i) {
        if (!std::isfinite(pos_[i]) || !std::isfinite(val_[i]))
            throw InvalidConfig("SamplePath: non-finite knot");
        if (i > 0 && !(pos_[i] > pos_[i - 1]))
            throw InvalidConfig("SamplePath: positions must be strictly increasing");
    }
}

SamplePath::SamplePath(std::initializer_list<std::pair<double, double>> knots) {
    pos_.reserve(knots.size());
    val_.reserve(knots.size());
    for (const auto& [x, w] : knots) append(x, w);
}

std::size_t SamplePath::segment_index(double x) const {
    auto it = std::upper_bound(pos_.begin(), pos_.end(), x);
    std::size_t j = static_cast<std::size_t>(it - pos_.begin());
    if (j == 0) return 0;
    return std::min(j - 1, pos_.size() - 2);
}

double SamplePath::at(double x) const {
    require_in_domain(*this, x, "SamplePath::at");
    if (pos_.size() == 1) return val_[0];
    const std::size_t i = segment_index(x);
    const double x0 = pos_[i], x1 = pos_[i + 1];
    if (x == x0) return val_[i];
    if (x == x1) return val_[i + 1];
    return val_[i] + (val_[i + 1] - val_[i]) * ((x - x0) / (x1 - x0));
}

void SamplePath::append(double position, double value) {
    if (!std::isfinite(position) || !std::isfinite(value))
        throw InvalidConfig("SamplePath::append: non-finite knot");
    if (!pos_.empty() && !(position > pos_.back()))
        throw InvalidConfig("SamplePath::append: positions must be strictly increasing");
    pos_.push_back(position);
    val_.push_back(value);
}

void SamplePath::reserve(std::size_t n) {
    pos_.reserve(n);
    val_.reserve(n);
}

std::optional<double> hitting_time(const SamplePath& path, double level, double from,
                                   const Extend& extend) {
    require_in_domain(path, from, "hitting_time");
    if (path.at(from) == level) return from;
    return scan_right(path, from, extend,
                      [level](double x0, double w0, double x1, double w1) -> std::optional<double> {
                          if (w1 == level) return x1;
                          if ((w0 < level) != (w1 < level)) return cross(x0, w0, x1, w1, level);
                          return std::nullopt;
                      });
}

std::optional<double> oscillation_first_exceed(const SamplePath& path, double from, double h,
                                               OscillationMode mode, const Extend& extend) {
    require_in_domain(path, from, "oscillation_first_exceed");
    if (!(h > 0)) throw InvalidConfig("oscillation_first_exceed: h must be positive");
    const double sign = mode == OscillationMode::above_running_min ? 1.0 : -1.0;
    double running = sign * path.at(from);
    return scan_right(path, from, extend,
                      [&](double x0, double w0, double x1, double w1) -> std::optional<double> {
                          const double u0 = sign * w0;
                          const double u1 = sign * w1;
                          if (u1 > u0 && u1 - running >= h)
                              return cross(x0, u0, x1, u1, running + h);
                          running = std::min(running, u1);
                          return std::nullopt;
                      });
}

double min_on(const SamplePath& path, double a, double b) {
    if (a > b) return kInf;
    return path.at(argmin_on(path, a, b));
}

double max_on(const SamplePath& path, double a, double b) {
    if (a > b) return -kInf;
    return path.at(argmax_on(path, a, b));
}

namespace {

template <typename Better>
double arg_extremum(const SamplePath& path, double a, double b, Better better) {
    require_in_domain(path, a, "argextremum");
    require_in_domain(path, b, "argextremum");
    if (a > b) throw DomainError("argextremum: empty interval");
    double best_x = a;
    double best_w = path.at(a);
    for (std::size_t j = next_knot(path, a); j < path.size() && path.position(j) < b; ++j) {
        if (better(path.value(j), best_w)) {
            best_x = path.position(j);
            best_w = path.value(j);
        }
    }
    if (better(path.at(b), best_w)) best_x = b;
    return best_x;
}

}  // namespace

double argmin_on(const SamplePath& path, double a, double b) {
    return arg_extremum(path, a, b, [](double w, double best) { return w < best; });
}

double argmax_on(const SamplePath& path, double a, double b) {
    return arg_extremum(path, a, b, [](double w, double best) { return w > best; });
}

namespace {

// Backward scan over [lo, hi] for the last position whose value satisfies
// `good`, solved exactly on the crossing segment.
template <typename Good>
std::optional<double> last_satisfying(const SamplePath& path, double lo, double hi, double level,
                                      Good good) {
    require_in_domain(path, lo, "backward scan");
    require_in_domain(path, hi, "backward scan");
    if (lo > hi) return std::nullopt;
    double x1 = hi;
    double w1 = path.at(hi);
    if (good(w1)) return hi;
    const auto pos = path.positions();
    std::size_t j = static_cast<std::size_t>(std::lower_bound(pos.begin(), pos.end(), hi) - pos.begin());
    while (x1 > lo) {
        double x0;
        double w0;
        if (j > 0 && path.position(j - 1) > lo) {
            --j;
            x0 = path.position(j);
            w0 = path.value(j);
        } else {
            x0 = lo;
            w0 = path.at(lo);
        }
        if (good(w0)) return cross(x0, w0, x1, w1, level);
        x1 = x0;
        w1 = w0;
    }
    return std::nullopt;
}

}  // namespace

std::optional<double> last_at_or_above(const SamplePath& path, double level, double floor,
                                       double upto) {
    return last_satisfying(path, floor, upto, level, [level](double w) { return w >= level; });
}

std::optional<double> last_at_or_below(const SamplePath& path, double level, double from,
                                       double upto) {
    return last_satisfying(path, from, upto, level, [level](double w) { return w <= level; });
}

std::optional<double> first_at_or_below(const SamplePath& path, double level, double from,
                                        double upto) {
    require_in_domain(path, from, "first_at_or_below");
    require_in_domain(path, upto, "first_at_or_below");
    if (from > upto) return std::nullopt;
    double x0 = from;
    double w0 = path.at(from);
    if (w0 <= level) return from;
    for (std::size_t j = next_knot(path, from); x0 < upto; ++j) {
        double x1;
        double w1;
        if (j < path.size() && path.position(j) < upto) {
            x1 = path.position(j);
            w1 = path.value(j);
        } else {
            x1 = upto;
            w1 = path.at(upto);
        }
        if (w1 <= level) return cross(x0, w0, x1, w1, level);
        x0 = x1;
        w0 = w1;
    }
    return std::nullopt;
}

SamplePath reflect(const SamplePath& path) {
    std::vector<double> pos(path.size());
    std::vector<double> val(path.size());
    const std::size_t n = path.size();
    for (std::size_t i = 0; i < n; ++i) {
        pos[i] = -path.position(n - 1 - i);
        val[i] = path.value(n - 1 - i);
    }
    return SamplePath(std::move(pos), std::move(val));
}

BesselFunctionals bessel_functionals(const SamplePath& r, double v, std::optional<double> tail_infimum) {
    if (r.empty()) throw DomainError("bessel_functionals: empty path");
    for (double w : r.values())
        if (w < 0) throw DomainError("bessel_functionals: path takes negative values");
    if (!(v > 0)) throw InvalidConfig("bessel_functionals: v must be positive");

    if (tail_infimum && !(*tail_infimum >= 0))
        throw DomainError("bessel_functionals: tail infimum must be >= 0");

    BesselFunctionals out;
    out.horizon_truncated = !tail_infimum.has_value();
    const std::size_t n = r.size();
    // tau = inf{x : R(x) >= v}
    if (r.value(0) >= v) {
        out.tau = r.front();
    } else {
        out.tau = hitting_time(r, v, r.front());
    }

    // Future infimum at knots, right to left.
    std::vector<double> fut(n);
    fut[n - 1] = tail_infimum ? std::min(r.value(n - 1), *tail_infimum) : r.value(n - 1);
    for (std::size_t k = n - 1; k-- > 0;) fut[k] = std::min(r.value(k), fut[k + 1]);

    // On segment k the deficit is max(0, R(x) - fut[k+1]).
    std::optional<double> rho_candidate;
    if (n == 1) return out;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double x0 = r.position(k), x1 = r.position(k + 1);
        const double g0 = r.value(k) - fut[k + 1];
        const double g1 = r.value(k + 1) - fut[k + 1];
        std::optional<double> zeta;
        if (g0 >= v) {
            zeta = x0;
        } else if (g1 >= v) {
            zeta = cross(x0, g0, x1, g1, v);
        }
        const double end = zeta ? *zeta : x1;
        // Last zero of the deficit on [x0, end].
        const double g_end = zeta ? v : g1;
        if (g_end <= 0) {
            rho_candidate = end;
        } else if (g0 <= 0) {
            rho_candidate = cross(x0, g0, end, g_end, 0.0);
        }
        if (zeta) {
            out.zeta = zeta;
            out.rho = rho_candidate;
            return out;
        }
    }
    return out;
}

void write_path_csv(std::ostream& out, const SamplePath& path) {
    out << "position,value\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < path.size(); ++i)
        out << path.position(i) << ',' << path.value(i) << '\n';
}

SamplePath read_path_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidConfig("path csv: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "position,value") throw InvalidConfig("path csv: expected header `position,value`");
    std::vector<double> pos;
    std::vector<double> val;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw InvalidConfig("path csv: line " + std::to_string(lineno) + " has no comma");
        try {
            std::size_t used = 0;
            const double x = std::stod(line.substr(0, comma), &used);
            const double w = std::stod(line.substr(comma + 1));
            pos.push_back(x);
            val.push_back(w);
        } catch (const std::logic_error&) {
            throw InvalidConfig("path csv: line " + std::to_string(lineno) + " is not numeric");
        }
        if (pos.size() > 1 && !(pos.back() > pos[pos.size() - 2]))
            throw InvalidConfig("path csv: positions not strictly increasing at line " +
                                std::to_string(lineno));
    }
    if (pos.empty()) throw InvalidConfig("path csv: no knots");
    return SamplePath(std::move(pos), std::move(val));
}

SamplePath read_path_csv(const std::string& filename) {
    std::ifstream in(filename);
    if (!in) throw InvalidConfig("cannot open path file " + filename);
    return read_path_csv(in);
}

}  // namespace brox
