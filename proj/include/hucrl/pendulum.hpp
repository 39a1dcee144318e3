#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "hucrl/adapter.hpp"
#include "hucrl/rng.hpp"
#include "hucrl/tolerance.hpp"

namespace hucrl {

inline double wrap_angle(double theta) {
    theta = std::fmod(theta + M_PI, 2.0 * M_PI);
    if (theta < 0.0) theta += 2.0 * M_PI;
    return theta - M_PI;  // (-pi, pi]
}

/// Torque-limited swing-up pendulum. Upright is theta = 0, the episode
/// starts hanging down at theta = pi. Actions live in
/// [-max_torque, max_torque] and each episode lasts `horizon` steps.
struct PendulumParams {
    double mass = 0.3;       // kg
    double length = 0.4;     // m
    double gravity = 9.81;   // m/s^2
    double friction = 0.005; // viscous coefficient
    double dt = 0.03;        // s
    double max_torque = 1.0;
    Eigen::Vector2d noise_std{0.001, 0.01};  // transition noise on (theta, omega)
    int horizon = 400;

    void validate() const {
        if (!(mass > 0.0) || !(length > 0.0) || !(gravity > 0.0))
            throw std::invalid_argument("PendulumParams: mass/length/gravity must be positive");
        if (!(dt > 0.0)) throw std::invalid_argument("PendulumParams: dt must be positive");
        if (!(max_torque > 0.0)) throw std::invalid_argument("PendulumParams: max_torque must be positive");
        if (horizon < 1) throw std::invalid_argument("PendulumParams: horizon must be >= 1");
        if ((noise_std.array() < 0.0).any())
            throw std::invalid_argument("PendulumParams: noise_std must be >= 0");
        if (friction < 0.0) throw std::invalid_argument("PendulumParams: friction must be >= 0");
    }
};

struct PendulumState {
    double theta = 0.0;  // rad, wrapped to (-pi, pi]
    double omega = 0.0;  // rad/s

    Eigen::Vector3d observation() const { return {std::sin(theta), std::cos(theta), omega}; }
    Eigen::Vector2d vec() const { return {theta, omega}; }
};

inline PendulumState episode_reset(const PendulumParams&) { return PendulumState{M_PI, 0.0}; }

/// Semi-implicit Euler on  ml^2 theta_dd = mgl sin(theta) - b omega + u,
/// followed by additive Gaussian transition noise and angle rewrap.
inline PendulumState pendulum_step(const PendulumParams& p, const PendulumState& s, double u, Rng& rng) {
    const double ml2 = p.mass * p.length * p.length;
    u = std::clamp(u, -p.max_torque, p.max_torque);
    const double acc = (p.gravity / p.length) * std::sin(s.theta) - (p.friction / ml2) * s.omega + u / ml2;
    double omega = s.omega + p.dt * acc;
    double theta = s.theta + p.dt * omega;
    if (p.noise_std[0] > 0.0) theta += p.noise_std[0] * rng.normal();
    if (p.noise_std[1] > 0.0) omega += p.noise_std[1] * rng.normal();
    if (!std::isfinite(theta) || !std::isfinite(omega))
        throw std::runtime_error("pendulum_step: non-finite state");
    return PendulumState{wrap_angle(theta), omega};
}

/// r = r_theta * r_omega + rho * r_u with the tolerance terms of the
/// sparse swing-up task; the action term is nonpositive.
inline double pendulum_reward(double theta, double omega, double u, double rho) {
    static const ToleranceSpec kTheta{0.95, 1.0, 0.1, 0.1};
    static const ToleranceSpec kOmega{-0.5, 0.5, 0.5, 0.1};
    static const ToleranceSpec kAction{-0.1, 0.1, 0.1, 0.1};
    const double r_theta = tolerance(std::cos(theta), kTheta);
    const double r_omega = tolerance(omega, kOmega);
    const double r_u = tolerance(u, kAction) - 1.0;
    return r_theta * r_omega + rho * r_u;
}

/// Environment facade used by the MPC loop; state vector is (theta, omega).
class PendulumEnv {
public:
    explicit PendulumEnv(PendulumParams params) : params_(params) { params_.validate(); }

    const PendulumParams& params() const { return params_; }
    int horizon() const { return params_.horizon; }

    Eigen::VectorXd reset() {
        state_ = episode_reset(params_);
        return state_.vec();
    }

    Eigen::VectorXd step(const Eigen::VectorXd& u, Rng& rng) {
        state_ = pendulum_step(params_, state_, u[0], rng);
        return state_.vec();
    }

    const PendulumState& state() const { return state_; }

private:
    PendulumParams params_;
    PendulumState state_{};
};

/// Reward functor over (theta, omega) states, with the batched float path
/// used inside particle rollouts.
struct PendulumReward {
    double rho = 0.0;

    double operator()(const Eigen::VectorXd& s, const Eigen::VectorXd& u) const {
        return pendulum_reward(s[0], s[1], u[0], rho);
    }

    void reward_batch(const Eigen::MatrixXf& S, const Eigen::MatrixXf& U, Eigen::ArrayXf& out) const {
        const float scale2 = static_cast<float>(2.0 * std::log(10.0));  // value_at_margin = 0.1
        const float rho_f = static_cast<float>(rho);
        out.resize(S.cols());
        for (Eigen::Index j = 0; j < S.cols(); ++j) {
            const float rt = tolerance_f(std::cos(S(0, j)), 0.95f, 1.f, 10.f, scale2);
            const float rw = tolerance_f(S(1, j), -0.5f, 0.5f, 2.f, scale2);
            const float ru = tolerance_f(U(0, j), -0.1f, 0.1f, 10.f, scale2) - 1.f;
            out[j] = rt * rw + rho_f * ru;
        }
    }
};

/// Deterministic true-dynamics adapter: the planner-facing stand-in with
/// zero epistemic uncertainty, used for the oracle baseline. Hallucinated
/// actions are accepted and ignored so augmented plans stay well-formed.
class PendulumTruthAdapter {
public:
    explicit PendulumTruthAdapter(PendulumParams params) : params_(params) {
        params_.noise_std.setZero();
    }

    Eigen::Index state_dim() const { return 2; }

    Eigen::VectorXd step(const Eigen::VectorXd& s, const AugmentedAction& a, Rng& rng) const {
        PendulumState st{s[0], s[1]};
        return pendulum_step(params_, st, a.u[0], rng).vec();
    }

    void step_batch(const Eigen::MatrixXf& S, const Eigen::MatrixXf& U, const Eigen::MatrixXf&,
                    std::vector<Rng>&, Eigen::MatrixXf& S_next) const {
        const float g_l = static_cast<float>(params_.gravity / params_.length);
        const float ml2 = static_cast<float>(params_.mass * params_.length * params_.length);
        const float b_ml2 = static_cast<float>(params_.friction) / ml2;
        const float dt = static_cast<float>(params_.dt);
        const float tmax = static_cast<float>(params_.max_torque);
        S_next.resizeLike(S);
        for (Eigen::Index j = 0; j < S.cols(); ++j) {
            const float th = S(0, j), om = S(1, j);
            const float u = std::clamp(U(0, j), -tmax, tmax);
            const float om2 = om + dt * (g_l * std::sin(th) - b_ml2 * om + u / ml2);
            S_next(0, j) = th + dt * om2;
            S_next(1, j) = om2;
        }
    }

private:
    PendulumParams params_;
};

}  // namespace hucrl
