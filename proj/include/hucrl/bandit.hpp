#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "hucrl/posterior.hpp"
#include "hucrl/rng.hpp"

namespace hucrl {

/// Fixed 1-D test objective: a shallow decoy bump plus a higher global bump.
/// With a zero prior mean, any observation of the decoy exceeds the prior
/// everywhere, so the beta = 0 strategy latches onto whichever bump it saw
/// first while an optimistic strategy keeps exploring.
struct TwoBumpFunction {
    double decoy_center = 0.2;
    double decoy_height = 0.4;
    double decoy_width = 0.08;
    double global_center = 0.72;
    double global_height = 1.0;
    double global_width = 0.08;

    double operator()(double x) const {
        const double a = (x - decoy_center) / decoy_width;
        const double b = (x - global_center) / global_width;
        return decoy_height * std::exp(-0.5 * a * a) + global_height * std::exp(-0.5 * b * b);
    }

    double global_argmax() const { return global_center; }
    double decoy_argmax() const { return decoy_center; }
};

struct BanditProblem {
    TwoBumpFunction objective;
    Eigen::VectorXd grid;  // evaluation points on [0, 1]
    double noise_std = 0.01;

    static BanditProblem standard(int grid_points = 201) {
        BanditProblem b;
        b.grid = Eigen::VectorXd::LinSpaced(grid_points, 0.0, 1.0);
        return b;
    }

    int nearest_cell(double x) const {
        int best = 0;
        double bd = std::abs(grid[0] - x);
        for (int i = 1; i < grid.size(); ++i)
            if (std::abs(grid[i] - x) < bd) {
                bd = std::abs(grid[i] - x);
                best = i;
            }
        return best;
    }
};

/// UCB selection over a finite grid: argmax of mean + beta * std, ties
/// resolved to the lowest index.
inline int gp_ucb_select(const GpPosterior& post, double beta, const Eigen::VectorXd& grid) {
    if (grid.size() == 0) throw std::invalid_argument("gp_ucb_select: empty grid");
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid.size(); ++i) {
        Eigen::VectorXd x(1);
        x[0] = grid[i];
        const CalibratedPrediction pr = post.predict(x);
        const double v = pr.mean[0] + beta * pr.std[0];
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    return best;
}

struct BanditTrace {
    std::vector<int> selections;     // grid index per round
    std::vector<double> observations;
};

/// Appendix-style demo loop: start with one observation at the decoy (the
/// "found first" premise), then run GP-UCB rounds at the given beta.
inline BanditTrace run_bandit(const BanditProblem& prob, double beta, int rounds,
                              const KernelParams& kernel, std::uint64_t seed) {
    Rng rng(derive_seed(seed, {0xba4d17u}));
    GpDataset data;
    BanditTrace trace;

    auto observe = [&](int cell) {
        const double x = prob.grid[cell];
        const double y = prob.objective(x) + prob.noise_std * rng.normal();
        Eigen::VectorXd xv(1), yv(1);
        xv[0] = x;
        yv[0] = y;
        data.add(xv, yv);
        trace.selections.push_back(cell);
        trace.observations.push_back(y);
    };

    observe(prob.nearest_cell(prob.objective.decoy_argmax()));
    for (int r = 0; r < rounds; ++r) {
        const GpPosterior post = GpPosterior::fit(data, kernel);
        observe(gp_ucb_select(post, beta, prob.grid));
    }
    return trace;
}

}  // namespace hucrl
