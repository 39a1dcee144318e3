#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hucrl/posterior.hpp"
#include "hucrl/rff.hpp"
#include "hucrl/rng.hpp"

namespace hucrl {

/// A true action paired with the hallucinated action of the optimistic
/// reparameterization. eta is all-zero for non-optimistic strategies.
struct AugmentedAction {
    Eigen::VectorXd u;
    Eigen::VectorXd eta;
};

enum class Strategy { Greedy, Thompson, HUcrl };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Greedy: return "greedy";
        case Strategy::Thompson: return "thompson";
        case Strategy::HUcrl: return "hucrl";
    }
    return "?";
}

struct StrategyTag {
    Strategy kind = Strategy::HUcrl;
    double beta = 1.0;              // H-UCRL confidence scaling
    bool greedy_sampling = true;    // Greedy: sample the predictive Gaussian
    std::uint64_t sample_seed = 0;  // Thompson: seed of the frozen draw
};

/// Maps physical states to model inputs. Angle dimensions enter as
/// (sin, cos) pairs; everything else passes through raw.
struct StateEncoding {
    std::vector<int> angle_dims;  // indices into the physical state

    Eigen::Index feature_dim(Eigen::Index state_dim) const {
        return state_dim + static_cast<Eigen::Index>(angle_dims.size());
    }

    bool is_angle(int i) const {
        for (int a : angle_dims)
            if (a == i) return true;
        return false;
    }

    Eigen::VectorXd encode(const Eigen::VectorXd& s) const {
        Eigen::VectorXd out(feature_dim(s.size()));
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (is_angle(static_cast<int>(i))) {
                out[k++] = std::sin(s[i]);
                out[k++] = std::cos(s[i]);
            } else {
                out[k++] = s[i];
            }
        }
        return out;
    }

    /// Column-batched float encoding: S is p x B, out is feat x B.
    void encode_batch_f(const Eigen::MatrixXf& S, Eigen::MatrixXf& out) const {
        out.resize(feature_dim(S.rows()), S.cols());
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < S.rows(); ++i) {
            if (is_angle(static_cast<int>(i))) {
                out.row(k++) = S.row(i).array().sin();
                out.row(k++) = S.row(i).array().cos();
            } else {
                out.row(k++) = S.row(i);
            }
        }
    }
};

/// Raised by recover_eta when the requested delta leaves the confidence band.
struct OutOfBandError : std::runtime_error {
    int worst_dim;
    double violation;
    OutOfBandError(int dim, double v)
        : std::runtime_error("recover_eta: target outside the beta band (worst dimension " +
                             std::to_string(dim) + ", violation " + std::to_string(v) + ")"),
          worst_dim(dim),
          violation(v) {}
};

/// One-step transition function over the fitted model snapshot, immutable for
/// the duration of an episode. The strategy decides how epistemic uncertainty
/// enters: greedy samples it, Thompson replays a frozen function sample, and
/// H-UCRL exposes it to the planner through the hallucinated action.
class DynamicsAdapter {
public:
    DynamicsAdapter(const GpPosterior& model, StrategyTag strategy, StateEncoding encoding,
                    Eigen::VectorXd target_scale, Eigen::VectorXd process_noise_std = {},
                    Eigen::Index thompson_features = 1024)
        : model_(&model),
          strategy_(strategy),
          encoding_(std::move(encoding)),
          target_scale_(std::move(target_scale)),
          process_noise_std_(std::move(process_noise_std)),
          thompson_features_(thompson_features) {
        if (strategy_.kind == Strategy::Thompson)
            sample_ = sample_rff(model, thompson_features_, strategy_.sample_seed);
        scale_f_ = target_scale_.cast<float>();
    }

    const GpPosterior& model() const { return *model_; }
    const StrategyTag& strategy() const { return strategy_; }
    Eigen::Index state_dim() const { return target_scale_.size(); }
    bool has_process_noise() const { return process_noise_std_.size() > 0; }

    /// Posterior (mean, std) of the next-state delta in physical units.
    CalibratedPrediction predict(const Eigen::VectorXd& s, const Eigen::VectorXd& u) const {
        CalibratedPrediction pr = model_->predict(joined(s, u));
        pr.mean.array() *= target_scale_.array();
        pr.std.array() *= target_scale_.array();
        return pr;
    }

    Eigen::VectorXd step(const Eigen::VectorXd& s, const AugmentedAction& a, Rng& rng) const {
        Eigen::VectorXd delta;
        switch (strategy_.kind) {
            case Strategy::Greedy: {
                const CalibratedPrediction pr = predict(s, a.u);
                delta = pr.mean;
                if (strategy_.greedy_sampling)
                    delta.array() += pr.std.array() * rng.normal_vector(delta.size()).array();
                break;
            }
            case Strategy::HUcrl: {
                if ((a.eta.array().abs() > 1.0 + 1e-12).any())
                    throw std::invalid_argument("step_hallucinated: eta outside [-1,1]");
                const CalibratedPrediction pr = predict(s, a.u);
                delta = pr.mean + strategy_.beta * (pr.std.array() * a.eta.array()).matrix();
                break;
            }
            case Strategy::Thompson: {
                delta = (*sample_)(joined(s, a.u));
                delta.array() *= target_scale_.array();
                break;
            }
        }
        Eigen::VectorXd next = s + delta;
        if (has_process_noise())
            next.array() += process_noise_std_.array() * rng.normal_vector(next.size()).array();
        return next;
    }

    /// Vectorized transition for particle rollouts. S is p x B, U is q x B,
    /// Eta is p x B (ignored unless H-UCRL); each particle owns its rng.
    void step_batch(const Eigen::MatrixXf& S, const Eigen::MatrixXf& U, const Eigen::MatrixXf& Eta,
                    std::vector<Rng>& rngs, Eigen::MatrixXf& S_next) const {
        const Eigen::Index B = S.cols();
        const Eigen::Index p = S.rows();
        Eigen::MatrixXf X;
        encoding_.encode_batch_f(S, feat_buf_);
        X.resize(feat_buf_.rows() + U.rows(), B);
        X.topRows(feat_buf_.rows()) = feat_buf_;
        X.bottomRows(U.rows()) = U;

        if (strategy_.kind == Strategy::Thompson) {
            sample_->eval_batch_f(X, mean_buf_);
            S_next = S + scale_f_.asDiagonal() * mean_buf_;
        } else {
            model_->predict_batch_f(X, mean_buf_, std_buf_);
            S_next = S + scale_f_.asDiagonal() * mean_buf_;
            if (strategy_.kind == Strategy::HUcrl) {
                const float beta = static_cast<float>(strategy_.beta);
                S_next.noalias() +=
                    scale_f_.asDiagonal() * (Eta.array().rowwise() * (beta * std_buf_.transpose().array())).matrix();
            } else if (strategy_.greedy_sampling) {
                for (Eigen::Index j = 0; j < B; ++j) {
                    auto& rng = rngs[static_cast<std::size_t>(j)];
                    for (Eigen::Index i = 0; i < p; ++i)
                        S_next(i, j) += scale_f_[i] * std_buf_[j] * static_cast<float>(rng.normal());
                }
            }
        }
        if (has_process_noise()) {
            for (Eigen::Index j = 0; j < B; ++j) {
                auto& rng = rngs[static_cast<std::size_t>(j)];
                for (Eigen::Index i = 0; i < p; ++i)
                    S_next(i, j) += static_cast<float>(process_noise_std_[i] * rng.normal());
            }
        }
    }

    Eigen::VectorXd joined(const Eigen::VectorXd& s, const Eigen::VectorXd& u) const {
        const Eigen::VectorXd f = encoding_.encode(s);
        Eigen::VectorXd x(f.size() + u.size());
        x << f, u;
        return x;
    }

private:
    const GpPosterior* model_;
    StrategyTag strategy_;
    StateEncoding encoding_;
    Eigen::VectorXd target_scale_;
    Eigen::VectorXd process_noise_std_;
    Eigen::Index thompson_features_ = 1024;
    std::optional<RffSample> sample_;
    Eigen::VectorXf scale_f_;
    mutable Eigen::MatrixXf feat_buf_, mean_buf_;
    mutable Eigen::VectorXf std_buf_;
};

inline Eigen::VectorXd step_greedy(const DynamicsAdapter& a, const Eigen::VectorXd& s,
                                   const Eigen::VectorXd& u, Rng& rng) {
    if (a.strategy().kind != Strategy::Greedy) throw std::logic_error("step_greedy: wrong strategy");
    return a.step(s, {u, Eigen::VectorXd::Zero(a.state_dim())}, rng);
}

inline Eigen::VectorXd step_hallucinated(const DynamicsAdapter& a, const Eigen::VectorXd& s,
                                         const AugmentedAction& act, Rng& rng) {
    if (a.strategy().kind != Strategy::HUcrl) throw std::logic_error("step_hallucinated: wrong strategy");
    return a.step(s, act, rng);
}

inline Eigen::VectorXd step_thompson(const DynamicsAdapter& a, const Eigen::VectorXd& s,
                                     const Eigen::VectorXd& u, Rng& rng) {
    if (a.strategy().kind != Strategy::Thompson) throw std::logic_error("step_thompson: wrong strategy");
    return a.step(s, {u, Eigen::VectorXd::Zero(a.state_dim())}, rng);
}

/// Invert the reparameterization: find eta in [-1,1]^p with
/// delta = mean + beta * std ∘ eta. Exact on in-band targets; 0/0 resolves
/// to 0. Out-of-band targets raise OutOfBandError naming the worst dimension.
inline Eigen::VectorXd recover_eta(const DynamicsAdapter& a, double beta, const Eigen::VectorXd& s,
                                   const Eigen::VectorXd& u, const Eigen::VectorXd& target_delta) {
    const CalibratedPrediction pr = a.predict(s, u);
    const Eigen::ArrayXd half_band = beta * pr.std.array();
    const Eigen::ArrayXd gap = target_delta.array() - pr.mean.array();

    int worst = -1;
    double worst_violation = 0.0;
    for (Eigen::Index i = 0; i < gap.size(); ++i) {
        const double v = std::abs(gap[i]) - half_band[i];
        if (v > worst_violation + 1e-12 * std::max(1.0, half_band[i])) {
            worst_violation = v;
            worst = static_cast<int>(i);
        }
    }
    if (worst >= 0) throw OutOfBandError(worst, worst_violation);

    Eigen::VectorXd eta(gap.size());
    for (Eigen::Index i = 0; i < gap.size(); ++i) {
        if (half_band[i] == 0.0)
            eta[i] = 0.0;  // in-band with zero width means gap is 0 too
        else
            eta[i] = std::clamp(gap[i] / half_band[i], -1.0, 1.0);
    }
    return eta;
}

}  // namespace hucrl
