#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace fanet {

inline constexpr double kProbabilityEpsilon = 1e-7;

/// Two-unit logits (2 x N, row 1 = positive) with binary labels.
struct BatchScores {
    Eigen::MatrixXd logits;
    std::vector<int> labels;
};

/// Positive-unit logits of every domain branch (D x N) for positive samples.
struct InstanceScores {
    Eigen::MatrixXd positive_logits;
    std::vector<int> domains;
    std::vector<int> labels;
};

/// Mean binary cross-entropy on the two-way softmax positive probability,
/// clamped to [eps, 1 - eps]. Writes dL/dlogits when `grad` is non-null.
double bce_loss(const BatchScores& batch, Eigen::MatrixXd* grad = nullptr);

/// Mean cross-entropy of a D-way softmax over each sample's branch logits at
/// its own domain. Throws if a sample is not labeled positive.
double instance_embedding_loss(const InstanceScores& batch, Eigen::MatrixXd* grad = nullptr);

inline double total_loss(double l_cls, double l_inst, double alpha) { return l_cls + alpha * l_inst; }

/// Softmax positive probability of each column.
std::vector<double> positive_probability(const Eigen::MatrixXd& logits);

}  // namespace fanet
