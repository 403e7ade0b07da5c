#include "core/regressor.hpp"

#include "core/error.hpp"

namespace fanet {

BoxDeltas BoxRegressor::predict(const Eigen::VectorXd& feature) const {
    if (is_identity()) {
        return {0.0, 0.0, 0.0, 0.0};
    }
    require(feature.size() + 1 == weights.cols(), "regressor feature size mismatch");
    const Eigen::Index d = feature.size();
    const Eigen::Vector4d out = weights.leftCols(d) * feature + weights.col(d);
    return {out[0], out[1], out[2], out[3]};
}

Box BoxRegressor::apply(const Box& box, const Eigen::VectorXd& feature) const {
    if (is_identity()) {
        return box;
    }
    return deltas_to_box(box, predict(feature));
}

BoxRegressor identity_regressor(int feature_dim) {
    return {Eigen::MatrixXd::Zero(4, feature_dim + 1)};
}

BoxRegressor fit_box_regressor(const Eigen::MatrixXd& features, const std::vector<Box>& boxes, const Box& gt,
                               double lambda, int min_samples) {
    require(lambda >= 0.0, "ridge lambda must be non-negative");
    require(features.cols() == static_cast<Eigen::Index>(boxes.size()), "one feature column per box expected");
    const auto n = static_cast<int>(boxes.size());
    if (n < min_samples) {
        fail(ErrorKind::Runtime, "box regression needs at least " + std::to_string(min_samples) + " samples, got " +
                                     std::to_string(n));
    }
    const Eigen::Index d = features.rows();
    Eigen::MatrixXd x(d + 1, n);
    x.topRows(d) = features;
    x.row(d).setOnes();
    Eigen::MatrixXd y(n, 4);
    for (int i = 0; i < n; ++i) {
        const auto delta = box_to_deltas(boxes[static_cast<std::size_t>(i)], gt);
        for (int k = 0; k < 4; ++k) {
            y(i, k) = delta[static_cast<std::size_t>(k)];
        }
    }
    Eigen::MatrixXd gram = x * x.transpose();
    gram.diagonal().array() += lambda;
    const Eigen::MatrixXd w = gram.ldlt().solve(x * y);
    return {w.transpose()};
}

}  // namespace fanet
