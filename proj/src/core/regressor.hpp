#pragma once

#include <Eigen/Dense>
#include <vector>

#include "core/geometry.hpp"

namespace fanet {

/// Four independent ridge regressions from RoI features to box deltas.
/// Row k of `weights` holds the coefficients of delta k followed by its
/// intercept. All-zero weights reproduce the input box.
struct BoxRegressor {
    Eigen::MatrixXd weights;

    bool is_identity() const { return weights.size() == 0 || weights.isZero(0.0); }
    BoxDeltas predict(const Eigen::VectorXd& feature) const;
    Box apply(const Box& box, const Eigen::VectorXd& feature) const;
};

BoxRegressor identity_regressor(int feature_dim);

/// `features` is feature_dim x N, one column per box in `boxes`. The intercept
/// is penalized along with the weights. Throws when fewer than `min_samples`
/// boxes are given.
BoxRegressor fit_box_regressor(const Eigen::MatrixXd& features, const std::vector<Box>& boxes, const Box& gt,
                               double lambda = 1000.0, int min_samples = 8);

}  // namespace fanet
