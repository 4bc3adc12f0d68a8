#include "brox/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "brox/errors.hpp"

namespace brox {

double SamplerConfig::step_at(double position) const {
    return std::max(step, growth * std::abs(position));
}

void SamplerConfig::validate() const {
    if (!(step > 0) || !std::isfinite(step))
        throw InvalidConfig("sampler: step must be positive, got " + std::to_string(step));
    if (!(horizon >= 0) || !std::isfinite(horizon))
        throw InvalidConfig("sampler: horizon must be non-negative, got " + std::to_string(horizon));
    if (!(growth >= 0) || !std::isfinite(growth))
        throw InvalidConfig("sampler: growth must be non-negative");
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t replicate, std::string_view label) {
    std::uint64_t s = splitmix64(base_seed);
    s = splitmix64(s ^ replicate);
    s = splitmix64(s ^ hash_label(label));
    return s;
}

BrownianStream::BrownianStream(double step, double growth, std::uint64_t seed)
    : step_(step), growth_(growth), rng_(seed) {
    if (!(step > 0)) throw InvalidConfig("BrownianStream: step must be positive");
    if (!(growth >= 0)) throw InvalidConfig("BrownianStream: growth must be non-negative");
}

double BrownianStream::step_at(double position) const {
    return std::max(step_, growth_ * std::abs(position));
}

void BrownianStream::append(SamplePath& path, std::size_t count) {
    if (path.empty()) path.append(0.0, 0.0);
    double x = path.back();
    double w = path.value(path.size() - 1);
    for (std::size_t i = 0; i < count; ++i) {
        ++index_;
        // Exact multiples on a uniform grid keep knot positions free of
        // accumulated rounding.
        const double next = growth_ == 0.0 ? static_cast<double>(index_) * step_ : x + step_at(x);
        const double dx = next - x;
        w += std::sqrt(dx) * normal_(rng_);
        x = next;
        path.append(x, w);
    }
}

void BrownianStream::append_until(SamplePath& path, double position) {
    if (path.empty()) path.append(0.0, 0.0);
    while (path.back() < position) append(path, 1);
}

SamplePath sample_brownian(const SamplerConfig& config, bool two_sided) {
    config.validate();
    SamplePath right;
    BrownianStream rs(config.step, config.growth, derive_seed(config.seed, 0, "right"));
    rs.append_until(right, config.horizon);
    if (!two_sided) return right;

    SamplePath left;
    BrownianStream ls(config.step, config.growth, derive_seed(config.seed, 0, "left"));
    ls.append_until(left, config.horizon);
    SamplePath mirrored = reflect(left);
    std::vector<double> pos(mirrored.positions().begin(), mirrored.positions().end());
    std::vector<double> val(mirrored.values().begin(), mirrored.values().end());
    for (std::size_t i = 1; i < right.size(); ++i) {
        pos.push_back(right.position(i));
        val.push_back(right.value(i));
    }
    return SamplePath(std::move(pos), std::move(val));
}

double sq_bessel0_transition(double z, double dt, Rng& rng) {
    if (z <= 0.0) return 0.0;
    std::poisson_distribution<long long> poisson(z / (2.0 * dt));
    const long long n = poisson(rng);
    if (n == 0) return 0.0;
    std::gamma_distribution<double> gamma(static_cast<double>(n), 1.0);
    return 2.0 * dt * gamma(rng);
}

SamplePath sample_bessel(BesselKind kind, double start, const SamplerConfig& config) {
    config.validate();
    if (!(start >= 0) || !std::isfinite(start))
        throw DomainError("sample_bessel: start must be non-negative");

    // Knot grid shared by all kinds.
    std::vector<double> grid{0.0};
    {
        double x = 0.0;
        std::size_t k = 0;
        while (x < config.horizon) {
            ++k;
            x = config.growth == 0.0 ? static_cast<double>(k) * config.step : x + config.step_at(x);
            grid.push_back(x);
        }
    }
    std::vector<double> values(grid.size());
    Rng rng(derive_seed(config.seed, 0, "bessel"));

    switch (kind) {
        case BesselKind::bessel3:
        case BesselKind::sq_bessel_dim2: {
            const int dims = kind == BesselKind::bessel3 ? 3 : 2;
            const double origin = kind == BesselKind::bessel3 ? start : std::sqrt(start);
            std::normal_distribution<double> normal;
            double coord[3] = {origin, 0.0, 0.0};
            auto norm2 = [&] {
                double s = 0.0;
                for (int d = 0; d < dims; ++d) s += coord[d] * coord[d];
                return s;
            };
            values[0] = kind == BesselKind::bessel3 ? std::sqrt(norm2()) : norm2();
            for (std::size_t k = 1; k < grid.size(); ++k) {
                const double sd = std::sqrt(grid[k] - grid[k - 1]);
                for (int d = 0; d < dims; ++d) coord[d] += sd * normal(rng);
                values[k] = kind == BesselKind::bessel3 ? std::sqrt(norm2()) : norm2();
            }
            break;
        }
        case BesselKind::sq_bessel_dim0: {
            values[0] = start;
            for (std::size_t k = 1; k < grid.size(); ++k)
                values[k] = sq_bessel0_transition(values[k - 1], grid[k] - grid[k - 1], rng);
            break;
        }
    }
    return SamplePath(std::move(grid), std::move(values));
}

}  // namespace brox
