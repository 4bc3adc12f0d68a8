#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace brox {

// Piecewise-linear real path on a strictly increasing knot grid. Evaluation
// between knots is linear interpolation; the domain is [front, back].
//
// Paths only grow at the right end (append), which is how lazily extended
// environments and drivers add knots without touching earlier ones.
class SamplePath {
public:
    SamplePath() = default;
    SamplePath(std::vector<double> positions, std::vector<double> values);
    SamplePath(std::initializer_list<std::pair<double, double>> knots);

    std::size_t size() const { return pos_.size(); }
    bool empty() const { return pos_.empty(); }

    double position(std::size_t i) const { return pos_[i]; }
    double value(std::size_t i) const { return val_[i]; }
    std::span<const double> positions() const { return pos_; }
    std::span<const double> values() const { return val_; }

    double front() const { return pos_.front(); }
    double back() const { return pos_.back(); }
    bool contains(double x) const { return !empty() && x >= front() && x <= back(); }

    // Index i with position(i) <= x <= position(i+1); the last segment owns
    // its right endpoint. Requires contains(x) and size() >= 2.
    std::size_t segment_index(double x) const;

    // Linear interpolation; throws DomainError outside the domain.
    double at(double x) const;

    void append(double position, double value);
    void reserve(std::size_t n);

    bool operator==(const SamplePath&) const = default;

private:
    std::vector<double> pos_;
    std::vector<double> val_;
};

// Called by scans that run off the last knot. Must append at least one knot
// to the scanned path and return true, or return false when the path cannot
// grow any further.
using Extend = std::function<bool()>;

enum class OscillationMode { above_running_min, below_running_max };

// First x >= from with path(x) == level; nullopt when never reached.
std::optional<double> hitting_time(const SamplePath& path, double level, double from,
                                   const Extend& extend = {});

// First x >= from where path(x) - min_{[from,x]} path (or max - path) reaches h.
std::optional<double> oscillation_first_exceed(const SamplePath& path, double from, double h,
                                               OscillationMode mode, const Extend& extend = {});

// Extrema over [a, b]. Reversed intervals follow the inf/sup conventions:
// min over an empty interval is +inf and max is -inf.
double min_on(const SamplePath& path, double a, double b);
double max_on(const SamplePath& path, double a, double b);

// Position of the minimum (maximum) over [a, b], attained at a knot or an
// endpoint; ties go to the smallest position.
double argmin_on(const SamplePath& path, double a, double b);
double argmax_on(const SamplePath& path, double a, double b);

// Last x in [floor, upto] with path(x) >= level.
std::optional<double> last_at_or_above(const SamplePath& path, double level, double floor,
                                       double upto);
// Last x in [from, upto] with path(x) <= level.
std::optional<double> last_at_or_below(const SamplePath& path, double level, double from,
                                       double upto);
// First x in [from, upto] with path(x) <= level.
std::optional<double> first_at_or_below(const SamplePath& path, double level, double from,
                                        double upto);

// Mirror about 0: knots (x, w) become (-x, w). An involution.
SamplePath reflect(const SamplePath& path);

struct BesselFunctionals {
    std::optional<double> tau;   // first hit of v
    std::optional<double> zeta;  // first x with R(x) - inf_{y>=x} R(y) >= v
    std::optional<double> rho;   // last x <= zeta where that deficit vanishes
    // The future infimum only sees the sampled domain (no tail infimum given).
    bool horizon_truncated = true;
};

// tail_infimum: infimum of R after the last knot, when known (for a 3-d
// Bessel process at level l it is l * U with U uniform on (0, 1)).
BesselFunctionals bessel_functionals(const SamplePath& path_r, double v,
                                     std::optional<double> tail_infimum = std::nullopt);

// CSV with header `position,value`; the reader validates monotonicity.
void write_path_csv(std::ostream& out, const SamplePath& path);
SamplePath read_path_csv(std::istream& in);
SamplePath read_path_csv(const std::string& filename);

}  // namespace brox
