#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hucrl/config.hpp"
#include "hucrl/mpc.hpp"
#include "hucrl/pendulum.hpp"

namespace hucrl {

inline constexpr const char* kManifestSchema = "hucrl-manifest";
inline constexpr int kManifestVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

/// Per-episode accounting. Everything model-related is evaluated against the
/// snapshot fitted before the episode (the sigma_{n-1} indexing of the
/// complexity measure), never the refit model.
struct EpisodeRecord {
    int index = 0;                      // 1-based episode number
    double episode_return = 0.0;        // realized sum of rewards
    double complexity_increment = 0.0;  // sum over steps of ||sigma_{n-1}(s,u)||^2
    double coverage = 0.0;              // calibration coverage of the episode's transitions
    double max_state_norm = 0.0;
    int longest_upright_hold = 0;       // consecutive steps with |theta| < 0.5
    double mutual_information = 0.0;    // I(y;f) of the pre-episode model
    double beta_rkhs = 0.0;             // RKHS beta of the pre-episode model (reported)
    int retained_points = 0;            // training-set size after the refit cap
    double wall_ms = 0.0;
};

struct RunManifest {
    nlohmann::json config_echo;
    std::string config_hash;
    std::vector<EpisodeRecord> episodes;
    double cumulative_complexity = 0.0;
    std::optional<double> oracle_return;
    bool solved_final_episode = false;
    bool completed = false;  // false when a run aborted partway

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema"] = kManifestSchema;
        j["version"] = kManifestVersion;
        j["tool_version"] = kToolVersion;
        j["config"] = config_echo;
        j["config_hash"] = config_hash;
        nlohmann::json eps = nlohmann::json::array();
        for (const auto& e : episodes) {
            eps.push_back({
                {"index", e.index},
                {"return", e.episode_return},
                {"complexity_increment", e.complexity_increment},
                {"coverage", e.coverage},
                {"max_state_norm", e.max_state_norm},
                {"longest_upright_hold", e.longest_upright_hold},
                {"mutual_information", e.mutual_information},
                {"beta_rkhs", e.beta_rkhs},
                {"retained_points", e.retained_points},
                {"wall_ms", e.wall_ms},
            });
        }
        j["episodes"] = std::move(eps);
        j["cumulative_complexity"] = cumulative_complexity;
        j["oracle_return"] = oracle_return ? nlohmann::json(*oracle_return) : nlohmann::json(nullptr);
        j["solved_final_episode"] = solved_final_episode;
        j["completed"] = completed;
        return j;
    }
};

/// Cumulative regret against an oracle estimate: sum of max(0, oracle - J_n).
inline std::vector<double> regret_curve(const RunManifest& manifest, double oracle) {
    std::vector<double> out;
    double acc = 0.0;
    for (const auto& e : manifest.episodes) {
        acc += std::max(0.0, oracle - e.episode_return);
        out.push_back(acc);
    }
    return out;
}

struct NoiseBoundReport {
    std::vector<bool> pass;          // per episode: max_state_norm <= bound
    double exceed_frequency = 0.0;   // empirical, to compare against delta
    std::vector<double> theoretical_bn;  // radius b_n when constants supplied, else empty
};

/// Domain-ball diagnostic: checks the realized max state norms against a
/// configured absolute bound and reports the theoretical radius
/// b_n = L^{T-1} N (B0 + sqrt(2 sigma p + 4 sigma/e log(N pi^2 n^2 / 3 delta)))
/// for user-supplied constants. Reported, never enforced.
inline NoiseBoundReport noise_bound_diagnostic(const RunManifest& manifest, const PendulumParams& params,
                                               double delta, double bound, double lipschitz_f = 0.0,
                                               double b0 = 0.0) {
    NoiseBoundReport rep;
    int exceed = 0;
    for (const auto& e : manifest.episodes) {
        const bool ok = e.max_state_norm <= bound;
        rep.pass.push_back(ok);
        if (!ok) ++exceed;
    }
    if (!manifest.episodes.empty())
        rep.exceed_frequency = static_cast<double>(exceed) / static_cast<double>(manifest.episodes.size());
    if (lipschitz_f > 0.0 && b0 > 0.0 && delta > 0.0) {
        const double sigma = params.noise_std.maxCoeff();
        const double p_dim = 2.0;
        const double N = static_cast<double>(params.horizon);
        const double T = static_cast<double>(manifest.episodes.size());
        for (std::size_t n = 1; n <= manifest.episodes.size(); ++n) {
            const double tail = 2.0 * sigma * p_dim +
                                4.0 * sigma / std::exp(1.0) *
                                    std::log(N * M_PI * M_PI * static_cast<double>(n * n) / (3.0 * delta));
            rep.theoretical_bn.push_back(std::pow(lipschitz_f, T - 1.0) * N * (b0 + std::sqrt(tail)));
        }
    }
    return rep;
}

/// Episodic model-based RL loop: fit model from all past transitions, plan
/// through it with the strategy's adapter, roll out on the true system,
/// append the data, refit.
class Agent {
public:
    explicit Agent(RunConfig config) : config_(std::move(config)) {
        config_.validate();
        encoding_ = StateEncoding{config_.model.angle_dims};
        post_ = GpPosterior::fit(GpDataset{}, config_.model.kernel);
        post_.set_prior_target_dim(config_.model.target_scale.size());
        manifest_.config_echo = to_json(config_);
        manifest_.config_hash = config_hash(manifest_.config_echo);
        manifest_.oracle_return = config_.oracle_return;
    }

    const RunConfig& config() const { return config_; }
    const GpPosterior& posterior() const { return post_; }
    const RunManifest& manifest() const { return manifest_; }
    const std::vector<Trajectory>& trajectories() const { return trajectories_; }
    std::size_t dataset_size() const { return data_.size(); }

    /// One iteration of the episodic loop. The record's model quantities use
    /// the pre-episode snapshot; the refit happens at the very end.
    EpisodeRecord run_episode(int episode_index) {
        const auto t0 = std::chrono::steady_clock::now();

        StrategyTag tag;
        tag.kind = config_.strategy.kind;
        tag.beta = config_.model.beta_schedule(post_);
        tag.greedy_sampling = config_.strategy.greedy_sampling;
        tag.sample_seed = derive_seed(config_.seed, {0x7f0u, static_cast<std::uint64_t>(episode_index)});

        DynamicsAdapter adapter(post_, tag, encoding_, config_.model.target_scale, {},
                                config_.strategy.thompson_features);

        PendulumEnv env(config_.env);
        PendulumReward reward{config_.rho};
        Rng episode_rng(derive_seed(config_.seed, {0xe9u, static_cast<std::uint64_t>(episode_index)}));

        Trajectory traj = mpc_track(env, adapter, reward, episode_rng);

        EpisodeRecord rec;
        rec.index = episode_index;
        rec.episode_return = traj.total_reward();
        rec.mutual_information = post_.mutual_information();
        rec.beta_rkhs = BetaSchedule::rkhs(1.0, config_.diagnostics.delta)(post_);

        int hold = 0;
        for (const auto& step : traj.steps) {
            const double theta = wrap_angle(step.next_state[0]);
            hold = std::abs(theta) < 0.5 ? hold + 1 : 0;
            rec.longest_upright_hold = std::max(rec.longest_upright_hold, hold);
            rec.max_state_norm = std::max(rec.max_state_norm, step.next_state.norm());
        }

        // diagnostics against the pre-episode model, then data append + refit
        GpDataset episode_data = transitions_of(traj);
        rec.complexity_increment = complexity_increment(episode_data);
        rec.coverage = post_.calibration_coverage(episode_data, config_.diagnostics.coverage_beta);

        for (std::size_t i = 0; i < episode_data.size(); ++i)
            data_.add(episode_data.inputs[i], episode_data.targets[i]);

        refit();
        rec.retained_points = static_cast<int>(post_.size());
        update_incumbent(traj);
        trajectories_.push_back(std::move(traj));

        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        manifest_.episodes.push_back(rec);
        manifest_.cumulative_complexity += rec.complexity_increment;
        return rec;
    }

    RunManifest run() {
        for (int n = 1; n <= config_.episodes; ++n) run_episode(n);
        const auto& last = manifest_.episodes.back();
        manifest_.solved_final_episode = last.longest_upright_hold >= 50;
        manifest_.completed = true;
        return manifest_;
    }

private:
    Trajectory mpc_track(PendulumEnv& env, const DynamicsAdapter& adapter, const PendulumReward& reward,
                         Rng& rng) {
        // like mpc_episode, but also captures the best-predicted plan so the
        // next episode can warm-start from the discovered maneuver
        const CemConfig& cem = config_.planner.cem;
        Rng plan_rng = rng.spawn(0x9a11u);
        Rng env_rng = rng.spawn(0xe321u);

        Trajectory traj;
        Eigen::VectorXd s = env.reset();
        std::optional<ActionSeqDistribution> dist;
        if (config_.planner.carry_warm_start && incumbent_.has_value()) {
            dist = incumbent_;
            inflate_stds(*dist);
        }

        best_plan_pred_ = -std::numeric_limits<double>::infinity();
        const Eigen::Index q = cem.action_dim();
        const Eigen::Index p = adapter.state_dim();

        for (int t = 0; t < env.horizon(); ++t) {
            const int iters = t < cem.full_iter_steps ? cem.n_iters : cem.n_warm_iters;
            PlanResult plan =
                plan_cem(adapter, reward, s, cem, plan_rng, dist.has_value() ? &dist.value() : nullptr, iters);
            if (t == 0) traj.initial_plan = plan.final_distribution;
            if (plan.predicted_return > best_plan_pred_ && near_initial_state(s)) {
                best_plan_pred_ = plan.predicted_return;
                best_plan_dist_ = plan.final_distribution;
            }

            TrajectoryStep step;
            step.state = s;
            step.action = plan.action;
            if (adapter.strategy().kind != Strategy::HUcrl) step.action.eta.setZero();
            step.reward = reward(s, plan.action.u);
            step.next_state = env.step(plan.action.u, env_rng);
            s = step.next_state;
            traj.steps.push_back(std::move(step));

            ActionSeqDistribution next = plan.final_distribution;
            const int H = cem.horizon;
            if (H > 1) {
                next.means.topRows(H - 1) = plan.final_distribution.means.bottomRows(H - 1);
                next.stds.topRows(H - 1) = plan.final_distribution.stds.bottomRows(H - 1);
            }
            next.means.row(H - 1).setZero();
            for (Eigen::Index d = 0; d < q; ++d)
                next.stds(H - 1, d) = cem.init_std * 0.5 * (cem.action_bounds(d, 1) - cem.action_bounds(d, 0));
            next.stds.row(H - 1).tail(p).setConstant(cem.init_std);
            dist = std::move(next);
        }
        traj.final_state = s;
        return traj;
    }

    bool near_initial_state(const Eigen::VectorXd& s) const {
        // plans are only reusable across episodes if they start near s0
        return std::abs(wrap_angle(s[0] - M_PI)) < 0.6 && std::abs(s[1]) < 1.5;
    }

    void inflate_stds(ActionSeqDistribution& d) const {
        const CemConfig& cem = config_.planner.cem;
        const double frac = config_.planner.carry_std_floor;
        for (Eigen::Index h = 0; h < d.stds.rows(); ++h) {
            for (Eigen::Index k = 0; k < cem.action_bounds.rows(); ++k)
                d.stds(h, k) = std::max(d.stds(h, k),
                                        frac * 0.5 * (cem.action_bounds(k, 1) - cem.action_bounds(k, 0)));
            for (Eigen::Index k = cem.action_bounds.rows(); k < d.stds.cols(); ++k)
                d.stds(h, k) = std::max(d.stds(h, k), frac);
        }
    }

    void update_incumbent(const Trajectory&) {
        if (best_plan_pred_ > 1.0 && best_plan_dist_.has_value()) incumbent_ = best_plan_dist_;
    }

    GpDataset transitions_of(const Trajectory& traj) const {
        GpDataset d;
        for (const auto& step : traj.steps) {
            Eigen::VectorXd x(encoding_.feature_dim(step.state.size()) + step.action.u.size());
            x << encoding_.encode(step.state), step.action.u;
            Eigen::VectorXd delta = step.next_state - step.state;
            for (int a : config_.model.angle_dims) delta[a] = wrap_angle(delta[a]);
            d.add(x, (delta.array() / config_.model.target_scale.array()).matrix());
        }
        return d;
    }

    double complexity_increment(const GpDataset& episode_data) const {
        // ||sigma_{n-1}(s,u)||^2 summed over the realized transitions, in
        // physical delta units
        double acc = 0.0;
        for (const auto& x : episode_data.inputs) {
            const CalibratedPrediction pr = post_.predict(x);
            acc += (pr.std.array() * config_.model.target_scale.array()).square().sum();
        }
        return acc;
    }

    void refit() {
        GpDataset capped =
            max_variance_subsample(data_, config_.model.kernel, static_cast<std::size_t>(config_.model.max_points));
        post_ = GpPosterior::fit(capped, config_.model.kernel);
        post_.set_prior_target_dim(config_.model.target_scale.size());
    }

    RunConfig config_;
    StateEncoding encoding_;
    GpDataset data_;
    GpPosterior post_;
    RunManifest manifest_;
    std::vector<Trajectory> trajectories_;
    std::optional<ActionSeqDistribution> incumbent_;
    std::optional<ActionSeqDistribution> best_plan_dist_;
    double best_plan_pred_ = -std::numeric_limits<double>::infinity();
};

/// Regret baseline: the same planner run directly on the true dynamics with
/// an enlarged budget (4x particles, 2x iterations), averaged over 5 seeds.
inline double oracle_return(const RunConfig& config, int n_seeds = 5) {
    CemConfig cem = config.planner.cem;
    cem.n_particles *= 4;
    cem.n_elites *= 4;
    cem.n_iters *= 2;
    cem.n_warm_iters *= 2;

    double acc = 0.0;
    for (int k = 0; k < n_seeds; ++k) {
        PendulumEnv env(config.env);
        PendulumTruthAdapter adapter(config.env);
        PendulumReward reward{config.rho};
        Rng rng(derive_seed(config.seed, {0x04ac1eu, static_cast<std::uint64_t>(k)}));
        const Trajectory traj = mpc_episode(env, adapter, reward, cem, std::nullopt, rng);
        acc += traj.total_reward();
    }
    return acc / static_cast<double>(n_seeds);
}

// ---- file outputs ----------------------------------------------------------

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

/// curve.csv: one row per episode. The regret column uses the configured
/// oracle estimate when present and a zero baseline otherwise.
inline void write_curve_csv(const RunManifest& manifest, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_curve_csv: cannot open " + path);
    f << "# config=" << manifest.config_hash << "\n";
    f << "episode,return,complexity,coverage,regret\n";
    const double oracle = manifest.oracle_return.value_or(0.0);
    double acc = 0.0;
    for (const auto& e : manifest.episodes) {
        acc += std::max(0.0, oracle - e.episode_return);
        f << e.index << ',' << format_double(e.episode_return) << ',' << format_double(e.complexity_increment)
          << ',' << format_double(e.coverage) << ',' << format_double(acc) << '\n';
    }
}

inline void write_manifest(const RunManifest& manifest, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_manifest: cannot open " + path);
    f << manifest.to_json().dump(2) << '\n';
}

/// Trajectory CSV: t, theta, omega, u, r.
inline void write_trajectory_csv(const Trajectory& traj, const std::string& config_hash,
                                 const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
    f << "# config=" << config_hash << "\n";
    f << "t,theta,omega,u,r\n";
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        const auto& s = traj.steps[t];
        f << t << ',' << format_double(s.state[0]) << ',' << format_double(s.state[1]) << ','
          << format_double(s.action.u[0]) << ',' << format_double(s.reward) << '\n';
    }
}

}  // namespace hucrl
