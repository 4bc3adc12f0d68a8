#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "brox/path.hpp"

namespace brox {

using Rng = std::mt19937_64;

// Knot spacing, seed and extent for a sampled path. With growth > 0 the grid
// is geometric away from the origin: the step at position x is
// max(step, growth * |x|).
struct SamplerConfig {
    double step = 0.01;
    std::uint64_t seed = 0;
    double horizon = 1.0;
    double growth = 0.0;

    double step_at(double position) const;
    void validate() const;  // throws InvalidConfig
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_label(std::string_view label);
// Seed for stream `label` of replicate `replicate`; streams of distinct
// (replicate, label) pairs are disjoint by construction.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t replicate, std::string_view label);

// One-sided Gaussian walk generator that can be resumed: each call appends
// knots continuing exactly where the previous call stopped.
class BrownianStream {
public:
    BrownianStream() = default;
    BrownianStream(double step, double growth, std::uint64_t seed);

    // Appends up to `count` knots to `path` (which must end where the
    // previous append left it, or be a single knot at 0).
    void append(SamplePath& path, std::size_t count);
    // Appends knots until path.back() >= position.
    void append_until(SamplePath& path, double position);

    double step_at(double position) const;

private:
    double step_ = 0.01;
    double growth_ = 0.0;
    std::size_t index_ = 0;  // knots produced after the origin
    Rng rng_;
    std::normal_distribution<double> normal_;
};

// Gaussian random walk with variance equal to the knot spacing; when
// two_sided, independent walks on each side of 0 (value exactly 0 at 0).
SamplePath sample_brownian(const SamplerConfig& config, bool two_sided);

enum class BesselKind { bessel3, sq_bessel_dim2, sq_bessel_dim0 };

SamplePath sample_bessel(BesselKind kind, double start, const SamplerConfig& config);

// Exact transition of the 0-dimensional squared Bessel process over dt:
// Poisson(z / 2dt)-mixed Gamma, absorbing at 0.
double sq_bessel0_transition(double z, double dt, Rng& rng);

}  // namespace brox
