#pragma once

#include <cmath>
#include <stdexcept>

namespace hucrl {

/// Plateau-plus-sigmoid shaping term: 1 inside [lower, upper], decaying
/// outside with a Gaussian sigmoid calibrated so that a point at distance
/// `margin` from the nearest bound scores value_at_margin.
struct ToleranceSpec {
    double lower = 0.0;
    double upper = 0.0;
    double margin = 0.0;
    double value_at_margin = 0.1;

    void validate() const {
        if (lower > upper) throw std::invalid_argument("ToleranceSpec: lower > upper");
        if (margin < 0.0) throw std::invalid_argument("ToleranceSpec: margin must be >= 0");
        if (!(value_at_margin > 0.0 && value_at_margin < 1.0))
            throw std::invalid_argument("ToleranceSpec: value_at_margin must be in (0,1)");
    }
};

inline double tolerance(double x, const ToleranceSpec& spec) {
    const bool inside = x >= spec.lower && x <= spec.upper;
    if (inside) return 1.0;
    if (spec.margin == 0.0) return 0.0;
    const double dist = (x < spec.lower ? spec.lower - x : x - spec.upper) / spec.margin;
    const double scale = std::sqrt(-2.0 * std::log(spec.value_at_margin));
    return std::exp(-0.5 * (dist * scale) * (dist * scale));
}

inline float tolerance_f(float x, float lower, float upper, float inv_margin, float scale2) {
    if (x >= lower && x <= upper) return 1.f;
    if (inv_margin <= 0.f) return 0.f;
    const float dist = (x < lower ? lower - x : x - upper) * inv_margin;
    return std::exp(-0.5f * dist * dist * scale2);
}

}  // namespace hucrl
