#pragma once

#include <cmath>
#include <cstdint>

#include "codebench/common.hpp"

namespace codebench::accel {

/// Signed fixed point with `il` integer bits (sign included) and `fl`
/// fraction bits.
struct FixedPointSpec {
    int il = 4;
    int fl = 16;

    double epsilon() const { return std::ldexp(1.0, -fl); }
    double max_value() const { return std::ldexp(1.0, il - 1) - epsilon(); }
    double min_value() const { return -std::ldexp(1.0, il - 1); }
    double bytes_per_value() const { return static_cast<double>(il + fl) / 8.0; }
};

class StochasticRounder {
public:
    explicit StochasticRounder(FixedPointSpec spec = {}) : spec_(spec) {
        if (spec.il < 1 || spec.fl < 0 || spec.il + spec.fl > 52) throw ParameterError("unsupported fixed-point format");
    }

    /// Rounds down to the grid with probability (floor + eps - x) / eps and
    /// up otherwise. Values outside the representable range saturate.
    double round(double x, Rng& rng) {
        if (!std::isfinite(x)) throw ParameterError("cannot round a non-finite value");
        const double eps = spec_.epsilon();
        if (x >= spec_.max_value() || x <= spec_.min_value()) {
            if (x > spec_.max_value() || x < spec_.min_value()) ++saturations_;
            return x > 0 ? spec_.max_value() : spec_.min_value();
        }
        const double lo = std::floor(x / eps) * eps;
        const double frac = (x - lo) / eps;
        if (frac == 0.0) return lo;
        return uniform01(rng) < frac ? lo + eps : lo;
    }

    std::uint64_t saturations() const { return saturations_; }
    const FixedPointSpec& spec() const { return spec_; }

private:
    FixedPointSpec spec_;
    std::uint64_t saturations_ = 0;
};

}  // namespace codebench::accel
