#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace hucrl {

/// Regression data for the dynamics model: inputs are concatenated
/// (state features, action) vectors, targets are next-state deltas.
struct GpDataset {
    std::vector<Eigen::VectorXd> inputs;
    std::vector<Eigen::VectorXd> targets;

    GpDataset() = default;

    std::size_t size() const { return inputs.size(); }
    bool empty() const { return inputs.empty(); }

    Eigen::Index input_dim() const { return inputs.empty() ? 0 : inputs.front().size(); }
    Eigen::Index target_dim() const { return targets.empty() ? 0 : targets.front().size(); }

    void add(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        if (!inputs.empty() && (x.size() != input_dim() || y.size() != target_dim()))
            throw std::invalid_argument("GpDataset::add: dimension mismatch");
        inputs.push_back(x);
        targets.push_back(y);
    }

    void validate() const {
        if (inputs.size() != targets.size())
            throw std::invalid_argument("GpDataset: inputs and targets differ in length");
        for (const auto& x : inputs)
            if (x.size() != input_dim()) throw std::invalid_argument("GpDataset: ragged inputs");
        for (const auto& y : targets)
            if (y.size() != target_dim()) throw std::invalid_argument("GpDataset: ragged targets");
    }

    /// Column matrix views (d x n and p x n).
    Eigen::MatrixXd input_matrix() const {
        Eigen::MatrixXd X(input_dim(), static_cast<Eigen::Index>(size()));
        for (Eigen::Index i = 0; i < X.cols(); ++i) X.col(i) = inputs[static_cast<std::size_t>(i)];
        return X;
    }
    Eigen::MatrixXd target_matrix() const {
        Eigen::MatrixXd Y(target_dim(), static_cast<Eigen::Index>(size()));
        for (Eigen::Index i = 0; i < Y.cols(); ++i) Y.col(i) = targets[static_cast<std::size_t>(i)];
        return Y;
    }
};

}  // namespace hucrl
