#pragma once

#include <cmath>
#include <stdexcept>

#include "hucrl/posterior.hpp"

namespace hucrl {

/// Confidence scaling for the calibrated model. Either a fixed constant or
/// the RKHS-based schedule beta = B + 4 sigma sqrt(I(y;f) + 1 + ln(1/delta)).
struct BetaSchedule {
    enum class Mode { Fixed, Rkhs };

    Mode mode = Mode::Fixed;
    double value = 1.0;   // Fixed mode
    double rkhs_bound = 1.0;
    double delta = 0.1;

    static BetaSchedule fixed(double v) {
        if (v < 0.0) throw std::invalid_argument("BetaSchedule: fixed beta must be nonnegative");
        BetaSchedule b;
        b.mode = Mode::Fixed;
        b.value = v;
        return b;
    }

    static BetaSchedule rkhs(double bound, double delta) {
        if (!(bound > 0.0)) throw std::invalid_argument("BetaSchedule: RKHS bound must be positive");
        if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("BetaSchedule: delta must be in (0,1)");
        BetaSchedule b;
        b.mode = Mode::Rkhs;
        b.rkhs_bound = bound;
        b.delta = delta;
        return b;
    }

    double operator()(const GpPosterior& post) const {
        if (mode == Mode::Fixed) return value;
        const double sigma = std::sqrt(post.kernel().noise_variance);
        const double mi = post.mutual_information();
        return rkhs_bound + 4.0 * sigma * std::sqrt(mi + 1.0 + std::log(1.0 / delta));
    }
};

}  // namespace hucrl
