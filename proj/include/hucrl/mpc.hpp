#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "hucrl/cem.hpp"

namespace hucrl {

struct TrajectoryStep {
    Eigen::VectorXd state;
    AugmentedAction action;  // planned (u, eta); only u is executed
    double reward = 0.0;
    Eigen::VectorXd next_state;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    Eigen::VectorXd final_state;
    ActionSeqDistribution initial_plan;  // distribution after the episode's first plan

    double total_reward() const {
        double s = 0.0;
        for (const auto& st : steps) s += st.reward;
        return s;
    }
};

/// Receding-horizon control: replan from the current true state at every
/// step, execute only the true action, and time-shift the proposal
/// distribution as the next warm start (last step reset to the initial std).
template <typename Env, typename Adapter, typename Reward>
Trajectory mpc_episode(Env& env, const Adapter& adapter, const Reward& reward,
                       const CemConfig& config, const std::optional<ActionSeqDistribution>& warm_start,
                       Rng& rng) {
    config.validate();
    if (env.horizon() < 1) throw std::invalid_argument("mpc_episode: env horizon must be >= 1");

    Rng plan_rng = rng.spawn(0x9a11u);
    Rng env_rng = rng.spawn(0xe321u);

    Trajectory traj;
    traj.steps.reserve(static_cast<std::size_t>(env.horizon()));
    Eigen::VectorXd s = env.reset();

    std::optional<ActionSeqDistribution> dist = warm_start;
    const Eigen::Index q = config.action_dim();
    const Eigen::Index p = adapter.state_dim();
    const Eigen::VectorXd half_eta = Eigen::VectorXd::Ones(p);

    for (int t = 0; t < env.horizon(); ++t) {
        const int iters = t < config.full_iter_steps ? config.n_iters : config.n_warm_iters;
        PlanResult plan = plan_cem(adapter, reward, s, config, plan_rng,
                                   dist.has_value() ? &dist.value() : nullptr, iters);
        if (t == 0) traj.initial_plan = plan.final_distribution;

        TrajectoryStep step;
        step.state = s;
        step.action = plan.action;
        step.reward = reward(s, plan.action.u);
        step.next_state = env.step(plan.action.u, env_rng);
        s = step.next_state;
        traj.steps.push_back(std::move(step));

        // shift one step: drop the executed row, append a fresh last row
        ActionSeqDistribution next = plan.final_distribution;
        const int H = config.horizon;
        if (H > 1) {
            next.means.topRows(H - 1) = plan.final_distribution.means.bottomRows(H - 1);
            next.stds.topRows(H - 1) = plan.final_distribution.stds.bottomRows(H - 1);
        }
        next.means.row(H - 1).setZero();
        for (Eigen::Index d = 0; d < q; ++d)
            next.stds(H - 1, d) =
                config.init_std * 0.5 * (config.action_bounds(d, 1) - config.action_bounds(d, 0));
        next.stds.row(H - 1).tail(p).setConstant(config.init_std);
        dist = std::move(next);
    }
    traj.final_state = s;
    return traj;
}

}  // namespace hucrl
