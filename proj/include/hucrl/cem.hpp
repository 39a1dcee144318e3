#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "hucrl/adapter.hpp"
#include "hucrl/rng.hpp"

namespace hucrl {

/// Shooting-planner hyperparameters. The planner always works in the
/// augmented action space: q true dimensions bounded by action_bounds
/// followed by p hallucinated dimensions bounded by [-1, 1].
struct CemConfig {
    int horizon = 45;
    int n_particles = 300;
    int n_iters = 5;        // CEM rounds for early-episode plans
    int n_warm_iters = 2;   // CEM rounds once the receding-horizon warm start exists
    int full_iter_steps = 60;  // env steps per episode that use n_iters
    int n_elites = 30;
    double init_std = 1.0;   // initial proposal std as a fraction of each half-range
    double alpha = 0.1;      // blend weight toward the previous distribution
    double std_floor = 0.01; // floor as a fraction of each range
    double discount = 1.0;
    double noise_beta = 2.5; // power-law exponent of the proposal noise; 0 = white
    bool elitism = true;
    Eigen::MatrixX2d action_bounds;  // q x 2, columns (lo, hi)

    void validate() const {
        if (horizon < 1) throw std::invalid_argument("CemConfig: horizon must be >= 1");
        if (n_particles < 2) throw std::invalid_argument("CemConfig: need at least 2 particles");
        if (n_elites < 1 || n_elites > n_particles)
            throw std::invalid_argument("CemConfig: n_elites must be in [1, n_particles]");
        if (n_iters < 1 || n_warm_iters < 1) throw std::invalid_argument("CemConfig: iterations must be >= 1");
        if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("CemConfig: alpha must be in [0,1]");
        if (!(init_std > 0.0)) throw std::invalid_argument("CemConfig: init_std must be positive");
        if (!(std_floor > 0.0)) throw std::invalid_argument("CemConfig: std_floor must be positive");
        if (!(discount > 0.0 && discount <= 1.0)) throw std::invalid_argument("CemConfig: discount in (0,1]");
        if (action_bounds.rows() < 1) throw std::invalid_argument("CemConfig: empty action bounds");
        for (Eigen::Index i = 0; i < action_bounds.rows(); ++i)
            if (!(action_bounds(i, 0) < action_bounds(i, 1)))
                throw std::invalid_argument("CemConfig: bounds lo < hi violated");
    }

    Eigen::Index action_dim() const { return action_bounds.rows(); }
};

/// Gaussian proposal over augmented action sequences: H x (q + p).
struct ActionSeqDistribution {
    Eigen::MatrixXd means;
    Eigen::MatrixXd stds;
};

struct PlanResult {
    AugmentedAction action;   // first step of the best elite
    double predicted_return = 0.0;
    ActionSeqDistribution final_distribution;
};

struct DivergedRolloutError : std::runtime_error {
    int step;
    explicit DivergedRolloutError(int t)
        : std::runtime_error("rollout diverged at step " + std::to_string(t)), step(t) {}
};

struct PlanningFailure : std::runtime_error {
    PlanningFailure() : std::runtime_error("plan_cem: every particle rollout diverged") {}
};

namespace detail {

/// Basis for temporally correlated proposal noise with a 1/f^beta power
/// spectrum. Columns are cos/sin modes weighted by amplitude; sequences
/// synthesized as basis * xi with iid normal xi have smooth, low-frequency
/// structure which a pure white proposal lacks.
inline Eigen::MatrixXf colored_noise_basis(int H, double beta) {
    const int kmax = H / 2;
    std::vector<double> amps;
    std::vector<int> ks;
    std::vector<bool> is_sin;
    for (int k = 0; k <= kmax; ++k) {
        const double f = static_cast<double>(std::max(k, 1)) / static_cast<double>(H);
        const double amp = std::pow(1.0 / f, beta / 2.0);
        ks.push_back(k);
        amps.push_back(amp);
        is_sin.push_back(false);
        if (k >= 1 && !(H % 2 == 0 && k == kmax)) {
            ks.push_back(k);
            amps.push_back(amp);
            is_sin.push_back(true);
        }
    }
    Eigen::MatrixXf basis(H, static_cast<Eigen::Index>(ks.size()));
    for (std::size_t j = 0; j < ks.size(); ++j) {
        for (int t = 0; t < H; ++t) {
            const double a = 2.0 * M_PI * ks[j] * t / static_cast<double>(H);
            basis(t, static_cast<Eigen::Index>(j)) =
                static_cast<float>(amps[j] * (is_sin[j] ? std::sin(a) : std::cos(a)));
        }
    }
    return basis;
}

/// Draw one H x D noise block for a particle, unit marginal std per dim.
inline void sample_noise_block(const Eigen::MatrixXf& basis, Rng& rng, Eigen::MatrixXf& out) {
    const Eigen::Index H = out.rows();
    const Eigen::Index D = out.cols();
    if (basis.cols() == 0 || H == 1) {  // white fallback
        for (Eigen::Index dcol = 0; dcol < D; ++dcol)
            for (Eigen::Index t = 0; t < H; ++t) out(t, dcol) = static_cast<float>(rng.normal());
        return;
    }
    Eigen::MatrixXf xi(basis.cols(), D);
    for (Eigen::Index dcol = 0; dcol < D; ++dcol)
        for (Eigen::Index j = 0; j < basis.cols(); ++j) xi(j, dcol) = static_cast<float>(rng.normal());
    out.noalias() = basis * xi;
    for (Eigen::Index dcol = 0; dcol < D; ++dcol) {
        const float mu = out.col(dcol).mean();
        const float sd = std::sqrt((out.col(dcol).array() - mu).square().mean());
        if (sd > 1e-6f)
            out.col(dcol) = (out.col(dcol).array() - mu) / sd;
    }
}

}  // namespace detail

/// Discounted return of one augmented action sequence under the adapter's
/// dynamics. Contract path (double precision); the terminal value is zero.
template <typename Adapter, typename Reward>
double rollout(const Adapter& adapter, const Reward& reward, const Eigen::VectorXd& s0,
               const std::vector<AugmentedAction>& seq, Rng& rng, double discount = 1.0) {
    Eigen::VectorXd s = s0;
    double ret = 0.0;
    double gamma = 1.0;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const double r = reward(s, seq[t].u);
        if (!std::isfinite(r)) throw DivergedRolloutError(static_cast<int>(t));
        ret += gamma * r;
        gamma *= discount;
        s = adapter.step(s, seq[t], rng);
        if (!s.allFinite()) throw DivergedRolloutError(static_cast<int>(t));
    }
    return ret;
}

/// Cross-entropy-method shooting over augmented action sequences.
/// Deterministic given (adapter, s0, config, rng state): every particle's
/// sampling and rollout noise comes from its own stream seeded by
/// (iteration, particle index), so results do not depend on evaluation order.
template <typename Adapter, typename Reward>
PlanResult plan_cem(const Adapter& adapter, const Reward& reward, const Eigen::VectorXd& s0,
                    const CemConfig& config, Rng& rng,
                    const ActionSeqDistribution* init_dist = nullptr, int n_iters_override = 0) {
    config.validate();
    const int H = config.horizon;
    const int P = config.n_particles;
    const int E = config.n_elites;
    const Eigen::Index q = config.action_dim();
    const Eigen::Index p = adapter.state_dim();
    const Eigen::Index D = q + p;
    const int iters = n_iters_override > 0 ? n_iters_override : config.n_iters;

    Eigen::VectorXd lo(D), hi(D);
    for (Eigen::Index i = 0; i < q; ++i) {
        lo[i] = config.action_bounds(i, 0);
        hi[i] = config.action_bounds(i, 1);
    }
    lo.tail(p).setConstant(-1.0);
    hi.tail(p).setConstant(1.0);
    const Eigen::VectorXd half = 0.5 * (hi - lo);
    const Eigen::VectorXd floor_vec = config.std_floor * (hi - lo);

    ActionSeqDistribution dist;
    if (init_dist) {
        if (init_dist->means.rows() != H || init_dist->means.cols() != D)
            throw std::invalid_argument("plan_cem: warm-start distribution has wrong shape");
        dist = *init_dist;
        dist.stds = dist.stds.cwiseMax((floor_vec.transpose().replicate(H, 1)));
    } else {
        dist.means = Eigen::MatrixXd::Zero(H, D);
        dist.stds = config.init_std * half.transpose().replicate(H, 1);
    }

    const Eigen::MatrixXf basis =
        config.noise_beta > 0.0 ? detail::colored_noise_basis(H, config.noise_beta) : Eigen::MatrixXf();

    const std::uint64_t plan_seed = rng.raw();
    const float neg_inf = -std::numeric_limits<float>::infinity();

    // particle workspaces
    std::vector<Eigen::MatrixXf> seqs(static_cast<std::size_t>(P));  // each H x D
    std::vector<Rng> rngs(static_cast<std::size_t>(P), Rng(0));
    Eigen::MatrixXf S(p, P), S_next(p, P), U(q, P), Eta(p, P);
    Eigen::ArrayXf rewards(P), returns(P);
    Eigen::MatrixXf noise(H, D);

    Eigen::MatrixXf best_seq;  // best elite across iterations
    double best_return = -std::numeric_limits<double>::infinity();

    const Eigen::MatrixXf lo_f = lo.cast<float>().transpose().replicate(H, 1);
    const Eigen::MatrixXf hi_f = hi.cast<float>().transpose().replicate(H, 1);

    std::vector<int> idx(static_cast<std::size_t>(P));
    const Eigen::VectorXf s0_f = s0.cast<float>();

    for (int it = 0; it < iters; ++it) {
        const Eigen::MatrixXf mean_f = dist.means.cast<float>();
        const Eigen::MatrixXf std_f = dist.stds.cast<float>();

        for (int i = 0; i < P; ++i) {
            rngs[static_cast<std::size_t>(i)] =
                Rng(derive_seed(plan_seed, {static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(i)}));
            detail::sample_noise_block(basis, rngs[static_cast<std::size_t>(i)], noise);
            seqs[static_cast<std::size_t>(i)] =
                (mean_f + (std_f.array() * noise.array()).matrix()).cwiseMax(lo_f).cwiseMin(hi_f);
        }
        if (config.elitism && best_seq.size() > 0) seqs[0] = best_seq;

        // batched rollout over all particles
        S.colwise() = s0_f;
        returns.setZero();
        float gamma = 1.f;
        for (int h = 0; h < H; ++h) {
            for (int i = 0; i < P; ++i) {
                U.col(i) = seqs[static_cast<std::size_t>(i)].row(h).head(q).transpose();
                Eta.col(i) = seqs[static_cast<std::size_t>(i)].row(h).tail(p).transpose();
            }
            reward.reward_batch(S, U, rewards);
            returns += gamma * rewards;
            gamma *= static_cast<float>(config.discount);
            adapter.step_batch(S, U, Eta, rngs, S_next);
            S.swap(S_next);
        }
        for (int i = 0; i < P; ++i)
            if (!std::isfinite(returns[i]) || !S.col(i).allFinite()) returns[i] = neg_inf;
        if ((returns == neg_inf).all()) throw PlanningFailure();

        // elite selection (stable: ties resolve to lower particle index)
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return returns[a] > returns[b]; });

        if (static_cast<double>(returns[idx[0]]) > best_return) {
            best_return = static_cast<double>(returns[idx[0]]);
            best_seq = seqs[static_cast<std::size_t>(idx[0])];
        }

        Eigen::MatrixXd elite_mean = Eigen::MatrixXd::Zero(H, D);
        for (int e = 0; e < E; ++e) elite_mean += seqs[static_cast<std::size_t>(idx[e])].cast<double>();
        elite_mean /= static_cast<double>(E);
        Eigen::MatrixXd elite_var = Eigen::MatrixXd::Zero(H, D);
        for (int e = 0; e < E; ++e) {
            const Eigen::MatrixXd d = seqs[static_cast<std::size_t>(idx[e])].cast<double>() - elite_mean;
            elite_var += d.cwiseProduct(d);
        }
        const Eigen::MatrixXd elite_std = (elite_var / static_cast<double>(E)).cwiseSqrt();

        dist.means = (1.0 - config.alpha) * elite_mean + config.alpha * dist.means;
        dist.stds = ((1.0 - config.alpha) * elite_std + config.alpha * dist.stds)
                        .cwiseMax(floor_vec.transpose().replicate(H, 1));
    }

    PlanResult out;
    out.action.u = best_seq.row(0).head(q).transpose().cast<double>();
    out.action.eta = best_seq.row(0).tail(p).transpose().cast<double>();
    out.predicted_return = best_return;
    out.final_distribution = dist;
    return out;
}

}  // namespace hucrl
