#include "core/losses.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace fanet {

namespace {

double sigmoid(double x) {
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

std::vector<double> positive_probability(const Eigen::MatrixXd& logits) {
    std::vector<double> p(static_cast<std::size_t>(logits.cols()));
    for (Eigen::Index i = 0; i < logits.cols(); ++i) {
        p[static_cast<std::size_t>(i)] = sigmoid(logits(1, i) - logits(0, i));
    }
    return p;
}

double bce_loss(const BatchScores& batch, Eigen::MatrixXd* grad) {
    const auto n = batch.logits.cols();
    require(n >= 1, "bce_loss: empty batch");
    require(batch.logits.rows() == 2, "bce_loss: logits must have two rows");
    require(static_cast<Eigen::Index>(batch.labels.size()) == n, "bce_loss: label count does not match logits");
    if (grad) {
        grad->setZero(2, n);
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int y = batch.labels[static_cast<std::size_t>(i)];
        require(y == 0 || y == 1, "bce_loss: labels must be 0 or 1");
        const double raw = sigmoid(batch.logits(1, i) - batch.logits(0, i));
        const double p = std::clamp(raw, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
        total -= y == 1 ? std::log(p) : std::log(1.0 - p);
        if (grad && raw == p) {
            const double g = (p - y) * inv_n;
            (*grad)(1, i) = g;
            (*grad)(0, i) = -g;
        }
    }
    return total * inv_n;
}

double instance_embedding_loss(const InstanceScores& batch, Eigen::MatrixXd* grad) {
    const auto n = batch.positive_logits.cols();
    const auto d = batch.positive_logits.rows();
    require(n >= 1, "instance_embedding_loss: empty batch");
    require(static_cast<Eigen::Index>(batch.domains.size()) == n, "instance_embedding_loss: domain count mismatch");
    require(static_cast<Eigen::Index>(batch.labels.size()) == n, "instance_embedding_loss: label count mismatch");
    if (grad) {
        grad->setZero(d, n);
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (batch.labels[static_cast<std::size_t>(i)] != 1) {
            fail(ErrorKind::InvalidArgument,
                 "instance_embedding_loss: sample " + std::to_string(i) + " is not a positive");
        }
        const int own = batch.domains[static_cast<std::size_t>(i)];
        require(own >= 0 && own < d, "instance_embedding_loss: domain index out of range");
        const auto col = batch.positive_logits.col(i);
        const double m = col.maxCoeff();
        const double log_z = m + std::log((col.array() - m).exp().sum());
        total -= col(own) - log_z;
        if (grad) {
            for (Eigen::Index k = 0; k < d; ++k) {
                (*grad)(k, i) = (std::exp(col(k) - log_z) - (k == own ? 1.0 : 0.0)) * inv_n;
            }
        }
    }
    return total * inv_n;
}

}  // namespace fanet
