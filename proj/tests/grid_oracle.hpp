#pragma once

// Brute-force scans on a refined grid, used as independent oracles for the
// segment-exact path operations.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "brox/path.hpp"

namespace grid {

struct Grid {
    std::vector<double> x;
    std::vector<double> w;
    double step = 0;  // largest spacing

    std::size_t index_at_or_after(double pos) const {
        std::size_t i = 0;
        while (i < x.size() && x[i] < pos) ++i;
        return i;
    }
};

// Each segment split into `factor` equal pieces; knots stay on the grid.
inline Grid refine(const brox::SamplePath& p, int factor = 10) {
    Grid g;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        const double x0 = p.position(i), x1 = p.position(i + 1);
        for (int k = 0; k < factor; ++k) {
            const double x = x0 + (x1 - x0) * k / factor;
            g.x.push_back(x);
            g.w.push_back(p.at(x));
        }
        g.step = std::max(g.step, (x1 - x0) / factor);
    }
    g.x.push_back(p.back());
    g.w.push_back(p.value(p.size() - 1));
    return g;
}

// The part of g at or after `from`, with `from` itself as the first point.
inline Grid tail(const Grid& g, const brox::SamplePath& p, double from) {
    Grid t;
    t.step = g.step;
    t.x.push_back(from);
    t.w.push_back(p.at(from));
    for (std::size_t i = 0; i < g.x.size(); ++i)
        if (g.x[i] > from) {
            t.x.push_back(g.x[i]);
            t.w.push_back(g.w[i]);
        }
    return t;
}

inline std::optional<double> first_level(const Grid& g, double level, std::size_t from, bool up) {
    for (std::size_t i = from; i < g.x.size(); ++i)
        if (up ? g.w[i] >= level : g.w[i] <= level) return g.x[i];
    return std::nullopt;
}

inline std::optional<double> oscillation(const Grid& g, std::size_t from, double h) {
    double run = std::numeric_limits<double>::infinity();
    for (std::size_t i = from; i < g.x.size(); ++i) {
        run = std::min(run, g.w[i]);
        if (g.w[i] - run >= h) return g.x[i];
    }
    return std::nullopt;
}

inline std::size_t argmin(const Grid& g, std::size_t lo, std::size_t hi) {
    std::size_t best = lo;
    for (std::size_t i = lo; i <= hi; ++i)
        if (g.w[i] < g.w[best]) best = i;
    return best;
}

inline std::size_t argmax(const Grid& g, std::size_t lo, std::size_t hi) {
    std::size_t best = lo;
    for (std::size_t i = lo; i <= hi; ++i)
        if (g.w[i] > g.w[best]) best = i;
    return best;
}

// Last grid index in [lo, hi] whose value satisfies the bound.
inline std::optional<std::size_t> last_index(const Grid& g, std::size_t lo, std::size_t hi,
                                             double level, bool above) {
    for (std::size_t i = hi + 1; i-- > lo;)
        if (above ? g.w[i] >= level : g.w[i] <= level) return i;
    return std::nullopt;
}

inline std::optional<std::size_t> first_index(const Grid& g, std::size_t lo, std::size_t hi,
                                              double level, bool above) {
    for (std::size_t i = lo; i <= hi; ++i)
        if (above ? g.w[i] >= level : g.w[i] <= level) return i;
    return std::nullopt;
}

// Midpoint rule on a fine uniform subdivision of [a, b].
template <typename F>
double riemann(F f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = 0;
    for (int i = 0; i < n; ++i) s += f(a + (i + 0.5) * h);
    return s * h;
}

}  // namespace grid
