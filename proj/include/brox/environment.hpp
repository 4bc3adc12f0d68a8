#pragma once

#include <cstdint>
#include <optional>

#include "brox/path.hpp"
#include "brox/sampling.hpp"

namespace brox {

enum class Side { right, left };

const char* to_string(Side side);

struct EnvironmentConfig {
    double step = 0.01;
    double growth = 0.0;  // geometric grid coefficient, see SamplerConfig
    std::uint64_t seed = 0;
    double initial_horizon = 1.0;
    std::size_t knot_budget = 1'000'000;  // per side
    std::size_t chunk = 4096;             // knots added per extension request
};

// How a side with fixed knots behaves past its last knot.
enum class Continuation { none, flat };

// Two-sided environment W with W(0) = 0, stored as two one-sided paths: the
// right side W(x), x >= 0, and the left side as the reversed path
// W^(x) = W(-x), x >= 0. Analysis on the left side therefore runs on the
// reversed environment with the same code as the right side.
//
// Brownian sides extend lazily from a per-side stream; extension appends
// knots and never changes existing ones. Extension is not thread-safe.
class Environment {
public:
    static Environment brownian(const EnvironmentConfig& config);
    // Both sides given explicitly as paths on [0, x] starting at (0, 0).
    static Environment fixed(SamplePath right, SamplePath left,
                             Continuation continuation = Continuation::none);
    // A two-sided path whose domain contains 0 with value 0 there.
    static Environment from_two_sided(const SamplePath& w,
                                      Continuation continuation = Continuation::none);
    // W identically 0, extendable in both directions.
    static Environment zero(double step = 0.01);

    const SamplePath& side(Side s) const { return state(s).path; }

    // Adds one chunk of knots; false when the side is fixed or its budget is spent.
    bool grow(Side s);
    // Extends until the side covers position u >= 0.
    bool ensure(Side s, double u);
    // True once a growth request on this side has been refused.
    bool truncated(Side s) const { return state(s).refused; }
    Extend extender(Side s);

    // W(x) on the whole line; extends on demand, HorizonError past the budget.
    double value(double x);
    // Domain of the two-sided path currently sampled: [-left.back(), right.back()].
    double left_extent() const { return side(Side::left).back(); }
    double right_extent() const { return side(Side::right).back(); }

    // Swaps the two sides: the result is the environment x -> W(-x).
    Environment reflected() const;

    std::size_t knot_budget() const { return budget_; }

private:
    enum class Kind { brownian, fixed, zero };
    struct SideState {
        SamplePath path;
        Kind kind = Kind::fixed;
        Continuation continuation = Continuation::none;
        BrownianStream stream;
        double zero_step = 0.01;
        bool refused = false;
    };

    SideState& state(Side s) { return s == Side::right ? right_ : left_; }
    const SideState& state(Side s) const { return s == Side::right ? right_ : left_; }

    SideState right_;
    SideState left_;
    std::size_t budget_ = 1'000'000;
    std::size_t chunk_ = 4096;
};

}  // namespace brox
