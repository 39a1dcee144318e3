#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

namespace hucrl {

/// Squared-exponential kernel with per-dimension lengthscales plus an
/// observation-noise level. One kernel is shared by all output dimensions.
struct KernelParams {
    Eigen::VectorXd lengthscales;  // one per input dimension
    double signal_variance = 1.0;
    double noise_variance = 1e-4;

    void validate() const {
        if (lengthscales.size() == 0) throw std::invalid_argument("KernelParams: empty lengthscales");
        if ((lengthscales.array() <= 0.0).any())
            throw std::invalid_argument("KernelParams: lengthscales must be positive");
        if (!(signal_variance > 0.0)) throw std::invalid_argument("KernelParams: signal_variance must be positive");
        if (!(noise_variance > 0.0)) throw std::invalid_argument("KernelParams: noise_variance must be positive");
    }

    Eigen::Index input_dim() const { return lengthscales.size(); }
};

inline double se_kernel(const KernelParams& k, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != k.input_dim() || y.size() != k.input_dim())
        throw std::invalid_argument("se_kernel: input dimension mismatch");
    const double d2 = ((x - y).array() / k.lengthscales.array()).square().sum();
    return k.signal_variance * std::exp(-0.5 * d2);
}

/// Kernel matrix between column sets A (d x n) and B (d x m).
inline Eigen::MatrixXd se_kernel_matrix(const KernelParams& k, const Eigen::MatrixXd& A,
                                        const Eigen::MatrixXd& B) {
    const Eigen::ArrayXd inv_ls = k.lengthscales.array().inverse();
    Eigen::MatrixXd Aw = inv_ls.matrix().asDiagonal() * A;
    Eigen::MatrixXd Bw = inv_ls.matrix().asDiagonal() * B;
    Eigen::MatrixXd D = (-2.0 * (Aw.transpose() * Bw));
    D.colwise() += Aw.colwise().squaredNorm().transpose();
    D.rowwise() += Bw.colwise().squaredNorm();
    return (k.signal_variance * (-0.5 * D.array().max(0.0)).exp()).matrix();
}

/// Metric induced by the kernel: d(x,x') = sqrt(k(x,x) + k(x',x') - 2 k(x,x')).
/// The posterior standard deviation is 1-Lipschitz in this metric.
inline double kernel_metric(const KernelParams& k, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double d2 = 2.0 * k.signal_variance - 2.0 * se_kernel(k, x, y);
    return std::sqrt(std::max(0.0, d2));
}

}  // namespace hucrl
