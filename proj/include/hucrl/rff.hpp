#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "hucrl/posterior.hpp"
#include "hucrl/rng.hpp"

namespace hucrl {

/// One posterior function drawn via random Fourier features. Frequencies come
/// from the spectral density of the squared-exponential kernel and are shared
/// by all output dimensions; the linear weights are fitted once and frozen,
/// so the sample stays consistent for a whole episode.
struct RffSample {
    Eigen::MatrixXd frequencies;  // m x d
    Eigen::VectorXd phases;       // m
    Eigen::MatrixXd weights;      // m x p
    double feature_scale = 1.0;   // sqrt(2 sv / m)

    // float mirror for batched rollouts
    Eigen::MatrixXf frequencies_f;
    Eigen::VectorXf phases_f;
    Eigen::MatrixXf weights_t_f;  // p x m

    Eigen::Index feature_count() const { return frequencies.rows(); }
    Eigen::Index target_dim() const { return weights.cols(); }

    Eigen::VectorXd features(const Eigen::VectorXd& x) const {
        return feature_scale * ((frequencies * x + phases).array().cos()).matrix();
    }

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
        return weights.transpose() * features(x);
    }

    /// Batched evaluation, Xq is d x B, output p x B.
    void eval_batch_f(const Eigen::MatrixXf& Xq, Eigen::MatrixXf& out) const {
        Eigen::MatrixXf Phi = (frequencies_f * Xq).colwise() + phases_f;
        Phi = (static_cast<float>(feature_scale) * Phi.array().cos()).matrix();
        out.noalias() = weights_t_f * Phi;
    }

    void build_float_mirror() {
        frequencies_f = frequencies.cast<float>();
        phases_f = phases.cast<float>();
        weights_t_f = weights.transpose().cast<float>();
    }
};

/// Draw one approximate posterior sample. Weights are obtained by pathwise
/// conditioning: fit ridge weights on the feature map against the targets
/// after subtracting a prior draw plus a noise draw, which yields an exact
/// sample under the finite-feature prior.
inline RffSample sample_rff(const GpPosterior& post, Eigen::Index m, std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("sample_rff: need at least one feature");
    const KernelParams& k = post.kernel();
    const Eigen::Index d = k.input_dim();
    const Eigen::Index p = post.target_dim();
    Rng rng(derive_seed(seed, {0x52f5u}));

    RffSample s;
    s.frequencies.resize(m, d);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < d; ++j) s.frequencies(i, j) = rng.normal() / k.lengthscales[j];
    s.phases.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) s.phases[i] = rng.uniform(0.0, 6.283185307179586);
    s.feature_scale = std::sqrt(2.0 * k.signal_variance / static_cast<double>(m));

    Eigen::MatrixXd W0(m, p);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < p; ++j) W0(i, j) = rng.normal();

    const auto n = static_cast<Eigen::Index>(post.size());
    if (n == 0) {
        s.weights = W0;  // plain prior draw
        s.build_float_mirror();
        return s;
    }

    Eigen::MatrixXd Phi(m, n);  // features of training inputs
    for (Eigen::Index i = 0; i < n; ++i)
        Phi.col(i) = s.features(post.dataset().inputs[static_cast<std::size_t>(i)]);

    const double nv = k.noise_variance;
    Eigen::MatrixXd resid = post.dataset().target_matrix().transpose();  // n x p
    resid.noalias() -= Phi.transpose() * W0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) resid(i, j) -= std::sqrt(nv) * rng.normal();

    Eigen::MatrixXd G = Phi.transpose() * Phi;  // n x n
    G.diagonal().array() += nv;
    const Eigen::MatrixXd Z = Eigen::LLT<Eigen::MatrixXd>(G).solve(resid);
    s.weights = W0 + Phi * Z;
    s.build_float_mirror();
    return s;
}

}  // namespace hucrl
