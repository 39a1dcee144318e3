#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "hucrl/dataset.hpp"
#include "hucrl/kernel.hpp"

namespace hucrl {

/// Per-dimension posterior mean and standard deviation of the next-state delta.
struct CalibratedPrediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
};

/// Exact multi-output GP posterior. All output dimensions are independent GPs
/// sharing the same input kernel matrix, so a single Cholesky factor serves
/// every output and the predictive standard deviation is common to all of them.
/// Immutable once fitted; safe to share across threads.
class GpPosterior {
public:
    GpPosterior() = default;

    /// Condition the prior on a dataset. The factorization jitter starts at
    /// 1e-8 * signal_variance and escalates tenfold up to 1e-4 before failing.
    static GpPosterior fit(const GpDataset& data, const KernelParams& kernel) {
        kernel.validate();
        data.validate();
        if (!data.empty() && data.input_dim() != kernel.input_dim())
            throw std::invalid_argument("GpPosterior::fit: dataset/kernel input dimension mismatch");

        GpPosterior post;
        post.data_ = data;
        post.kernel_ = kernel;
        const auto n = static_cast<Eigen::Index>(data.size());
        if (n == 0) {
            post.build_surrogate();
            return post;
        }

        post.X_ = data.input_matrix();
        const Eigen::MatrixXd K = se_kernel_matrix(kernel, post.X_, post.X_);

        double jitter = 1e-8 * kernel.signal_variance;
        const double jitter_cap = 1e-4 * kernel.signal_variance;
        Eigen::LLT<Eigen::MatrixXd> llt;
        while (true) {
            Eigen::MatrixXd A = K;
            A.diagonal().array() += kernel.noise_variance + jitter;
            llt.compute(A);
            if (llt.info() == Eigen::Success) break;
            jitter *= 10.0;
            if (jitter > jitter_cap) {
                Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
                throw std::runtime_error(
                    "GpPosterior::fit: Cholesky factorization failed (smallest pivot " +
                    std::to_string(ldlt.vectorD().minCoeff()) +
                    "); degenerate kernel or duplicate inputs with near-zero noise");
            }
        }
        post.jitter_ = jitter;
        post.chol_ = llt.matrixL();

        const Eigen::MatrixXd Yt = data.target_matrix().transpose();  // n x p
        post.alpha_ = llt.solve(Yt);                                  // n x p
        post.build_surrogate();
        return post;
    }

    bool empty() const { return data_.empty(); }
    std::size_t size() const { return data_.size(); }
    const GpDataset& dataset() const { return data_; }
    const KernelParams& kernel() const { return kernel_; }
    const Eigen::MatrixXd& chol() const { return chol_; }
    const Eigen::MatrixXd& alphas() const { return alpha_; }
    double jitter() const { return jitter_; }

    Eigen::Index target_dim() const {
        return data_.empty() ? fallback_target_dim_ : data_.target_dim();
    }

    /// Declares the output dimension for prior-only (empty) posteriors.
    void set_prior_target_dim(Eigen::Index p) { fallback_target_dim_ = p; }

    CalibratedPrediction predict(const Eigen::VectorXd& x) const {
        if (x.size() != kernel_.input_dim())
            throw std::invalid_argument("GpPosterior::predict: query dimension mismatch");
        const Eigen::Index p = target_dim();
        CalibratedPrediction out;
        if (data_.empty()) {
            out.mean = Eigen::VectorXd::Zero(p);
            out.std = Eigen::VectorXd::Constant(p, std::sqrt(kernel_.signal_variance));
            return out;
        }
        Eigen::VectorXd ks(static_cast<Eigen::Index>(size()));
        for (Eigen::Index i = 0; i < ks.size(); ++i) ks[i] = se_kernel(kernel_, X_.col(i), x);
        out.mean = alpha_.transpose() * ks;
        const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(ks);
        const double var = clamp_variance(kernel_.signal_variance - v.squaredNorm());
        out.std = Eigen::VectorXd::Constant(p, std::sqrt(var));
        return out;
    }

    /// Batched prediction, double precision. Xq is d x B; means come out
    /// p x B and the shared standard deviation as a length-B vector.
    void predict_batch(const Eigen::MatrixXd& Xq, Eigen::MatrixXd& mean, Eigen::VectorXd& std_out) const {
        const Eigen::Index B = Xq.cols();
        const Eigen::Index p = target_dim();
        if (data_.empty()) {
            mean = Eigen::MatrixXd::Zero(p, B);
            std_out = Eigen::VectorXd::Constant(B, std::sqrt(kernel_.signal_variance));
            return;
        }
        const Eigen::MatrixXd Ks = se_kernel_matrix(kernel_, X_, Xq);  // n x B
        mean = alpha_.transpose() * Ks;
        const Eigen::MatrixXd V = chol_.triangularView<Eigen::Lower>().solve(Ks);
        std_out.resize(B);
        for (Eigen::Index j = 0; j < B; ++j)
            std_out[j] = std::sqrt(clamp_variance(kernel_.signal_variance - V.col(j).squaredNorm()));
    }

    /// I(y; f) = 0.5 log det(I + K / noise_variance), read off the cached factor.
    double mutual_information() const {
        if (data_.empty()) return 0.0;
        const double log_sigma = 0.5 * std::log(kernel_.noise_variance);
        double mi = 0.0;
        for (Eigen::Index i = 0; i < chol_.rows(); ++i) mi += std::log(chol_(i, i)) - log_sigma;
        return mi;
    }

    /// Fraction of holdout points whose targets fall inside the beta-scaled
    /// confidence band in every output dimension.
    double calibration_coverage(const GpDataset& holdout, double beta) const {
        holdout.validate();
        if (holdout.empty()) throw std::invalid_argument("calibration_coverage: empty holdout");
        std::size_t hit = 0;
        for (std::size_t i = 0; i < holdout.size(); ++i) {
            const CalibratedPrediction pr = predict(holdout.inputs[i]);
            const Eigen::ArrayXd gap = (holdout.targets[i] - pr.mean).array().abs();
            if ((gap <= beta * pr.std.array()).all()) ++hit;
        }
        return static_cast<double>(hit) / static_cast<double>(holdout.size());
    }

    // ---- single-precision surrogate for the planner hot path ----
    struct Surrogate {
        Eigen::MatrixXf Xw;       // d x n, inputs pre-divided by lengthscales
        Eigen::VectorXf xw_norm;  // n, squared norms of Xw columns
        Eigen::MatrixXf Linv;     // n x n, inverse Cholesky factor
        Eigen::MatrixXf alpha_t;  // p x n
        Eigen::VectorXf inv_ls;   // d
        float signal_variance = 1.f;
        float prior_std = 1.f;
        Eigen::Index n = 0, p = 0;
    };

    const Surrogate& surrogate() const { return surrogate_; }

    /// Batched float prediction used inside particle rollouts. Xq is d x B.
    void predict_batch_f(const Eigen::MatrixXf& Xq, Eigen::MatrixXf& mean, Eigen::VectorXf& std_out) const {
        const Surrogate& s = surrogate_;
        const Eigen::Index B = Xq.cols();
        if (s.n == 0) {
            mean.setZero(s.p, B);
            std_out.setConstant(B, s.prior_std);
            return;
        }
        Eigen::MatrixXf Xqw = s.inv_ls.asDiagonal() * Xq;
        Eigen::MatrixXf D = (-2.f * (s.Xw.transpose() * Xqw));
        D.colwise() += s.xw_norm;
        D.rowwise() += Xqw.colwise().squaredNorm();
        const Eigen::MatrixXf Ks = (s.signal_variance * (-0.5f * D.array().max(0.f)).exp()).matrix();
        mean.noalias() = s.alpha_t * Ks;
        const Eigen::MatrixXf V = s.Linv * Ks;
        std_out = (s.signal_variance - V.colwise().squaredNorm().array()).max(0.f).sqrt().transpose();
    }

private:
    static double clamp_variance(double var) {
        if (var >= 0.0) return var;
        if (var > -1e-10) return 0.0;
        throw std::runtime_error("GpPosterior: negative predictive variance " + std::to_string(var));
    }

    void build_surrogate() {
        Surrogate& s = surrogate_;
        s.n = static_cast<Eigen::Index>(size());
        s.p = target_dim();
        s.signal_variance = static_cast<float>(kernel_.signal_variance);
        s.prior_std = std::sqrt(s.signal_variance);
        s.inv_ls = kernel_.lengthscales.array().inverse().cast<float>();
        if (s.n == 0) return;
        s.Xw = (kernel_.lengthscales.array().inverse().matrix().asDiagonal() * X_).cast<float>();
        s.xw_norm = s.Xw.colwise().squaredNorm();
        const Eigen::MatrixXd Linv =
            chol_.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(s.n, s.n));
        s.Linv = Linv.cast<float>();
        s.alpha_t = alpha_.transpose().cast<float>();
    }

    GpDataset data_;
    KernelParams kernel_;
    Eigen::MatrixXd X_;      // d x n
    Eigen::MatrixXd chol_;   // n x n lower
    Eigen::MatrixXd alpha_;  // n x p
    Surrogate surrogate_;
    double jitter_ = 0.0;
    Eigen::Index fallback_target_dim_ = 1;
};

/// Greedy max-posterior-variance subset selection, used to cap the exact GP
/// training set. Deterministic; ties resolve to the lowest index. Returns the
/// dataset restricted to the selected rows (original order preserved).
inline GpDataset max_variance_subsample(const GpDataset& data, const KernelParams& kernel,
                                        std::size_t max_points) {
    data.validate();
    if (data.size() <= max_points) return data;

    const auto n = static_cast<Eigen::Index>(data.size());
    const Eigen::MatrixXd X = data.input_matrix();
    Eigen::VectorXd resid = Eigen::VectorXd::Constant(n, kernel.signal_variance);
    Eigen::MatrixXd C(static_cast<Eigen::Index>(max_points), n);  // rows of the partial factor
    std::vector<char> taken(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> order;
    order.reserve(max_points);

    for (std::size_t k = 0; k < max_points; ++k) {
        Eigen::Index best = -1;
        double best_var = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j)
            if (!taken[static_cast<std::size_t>(j)] && resid[j] > best_var) {
                best_var = resid[j];
                best = j;
            }
        taken[static_cast<std::size_t>(best)] = 1;
        order.push_back(best);

        const Eigen::Index kk = static_cast<Eigen::Index>(k);
        Eigen::VectorXd kj(n);
        for (Eigen::Index j = 0; j < n; ++j) kj[j] = se_kernel(kernel, X.col(best), X.col(j));
        Eigen::VectorXd cj = kj;
        if (kk > 0) cj.noalias() -= C.topRows(kk).transpose() * C.topRows(kk).col(best);
        const double pivot = std::sqrt(std::max(resid[best] + kernel.noise_variance, 1e-12));
        cj /= pivot;
        C.row(kk) = cj.transpose();
        resid = (resid.array() - cj.array().square()).max(0.0).matrix();
    }

    std::sort(order.begin(), order.end());
    GpDataset out;
    for (Eigen::Index idx : order)
        out.add(data.inputs[static_cast<std::size_t>(idx)], data.targets[static_cast<std::size_t>(idx)]);
    return out;
}

}  // namespace hucrl
