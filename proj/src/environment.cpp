#include "brox/environment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "brox/errors.hpp"

namespace brox {

const char* to_string(Side side) { return side == Side::right ? "right" : "left"; }

namespace {

void require_origin(const SamplePath& p, const char* which) {
    if (p.empty() || p.front() != 0.0 || p.value(0) != 0.0)
        throw InvalidConfig(std::string("environment: ") + which + " side must start at (0, 0)");
}

}  // namespace

Environment Environment::brownian(const EnvironmentConfig& config) {
    SamplerConfig sc{config.step, config.seed, config.initial_horizon, config.growth};
    sc.validate();
    if (config.knot_budget < 2) throw InvalidConfig("environment: knot budget too small");
    Environment env;
    env.budget_ = config.knot_budget;
    env.chunk_ = std::max<std::size_t>(1, config.chunk);
    for (Side s : {Side::right, Side::left}) {
        SideState& st = env.state(s);
        st.kind = Kind::brownian;
        st.stream = BrownianStream(config.step, config.growth,
                                   derive_seed(config.seed, 0, s == Side::right ? "right" : "left"));
        st.path.append(0.0, 0.0);
        st.stream.append_until(st.path, config.initial_horizon);
    }
    return env;
}

Environment Environment::fixed(SamplePath right, SamplePath left, Continuation continuation) {
    require_origin(right, "right");
    require_origin(left, "left");
    Environment env;
    env.right_.path = std::move(right);
    env.left_.path = std::move(left);
    for (Side s : {Side::right, Side::left}) {
        SideState& st = env.state(s);
        st.kind = Kind::fixed;
        st.continuation = continuation;
        const std::size_t n = st.path.size();
        st.zero_step = n > 1 ? st.path.back() - st.path.position(n - 2) : 1.0;
    }
    return env;
}

Environment Environment::from_two_sided(const SamplePath& w, Continuation continuation) {
    if (!w.contains(0.0) || w.at(0.0) != 0.0)
        throw InvalidConfig("environment: two-sided path must contain 0 with W(0) = 0");
    SamplePath right{{0.0, 0.0}};
    SamplePath left{{0.0, 0.0}};
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double x = w.position(i);
        if (x > 0) right.append(x, w.value(i));
    }
    for (std::size_t i = w.size(); i-- > 0;) {
        const double x = w.position(i);
        if (x < 0) left.append(-x, w.value(i));
    }
    return fixed(std::move(right), std::move(left), continuation);
}

Environment Environment::zero(double step) {
    if (!(step > 0)) throw InvalidConfig("environment: step must be positive");
    Environment env;
    for (Side s : {Side::right, Side::left}) {
        SideState& st = env.state(s);
        st.kind = Kind::zero;
        st.zero_step = step;
        st.path.append(0.0, 0.0);
        st.path.append(step, 0.0);
    }
    return env;
}

bool Environment::grow(Side s) {
    SideState& st = state(s);
    if (st.path.size() >= budget_) {
        st.refused = true;
        return false;
    }
    const std::size_t n = std::min(chunk_, budget_ - st.path.size());
    switch (st.kind) {
        case Kind::brownian:
            st.stream.append(st.path, n);
            return true;
        case Kind::zero:
        case Kind::fixed: {
            if (st.kind == Kind::fixed && st.continuation == Continuation::none) {
                st.refused = true;
                return false;
            }
            const double w = st.path.value(st.path.size() - 1);
            for (std::size_t i = 0; i < n; ++i) st.path.append(st.path.back() + st.zero_step, w);
            return true;
        }
    }
    return false;
}

bool Environment::ensure(Side s, double u) {
    while (side(s).back() < u)
        if (!grow(s)) return false;
    return true;
}

Extend Environment::extender(Side s) {
    return [this, s] { return grow(s); };
}

double Environment::value(double x) {
    const Side s = x >= 0 ? Side::right : Side::left;
    const double u = std::abs(x);
    if (!ensure(s, u)) {
        std::ostringstream msg;
        msg << "environment: position " << x << " beyond the extension budget";
        throw HorizonError(msg.str());
    }
    return side(s).at(u);
}

Environment Environment::reflected() const {
    Environment env = *this;
    std::swap(env.right_, env.left_);
    return env;
}

}  // namespace brox
