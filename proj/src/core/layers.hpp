#pragma once

#include <Eigen/Dense>

#include <vector>

#include "core/params.hpp"
#include "core/tensor.hpp"

namespace fanet {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ConvGeometry {
    int kernel = 3;
    int stride = 1;
    int pad = 0;
    int dilation = 1;
};

int conv_output_size(int input, const ConvGeometry& g);

struct ConvCache {
    int in_channels = 0;
    int in_height = 0;
    int in_width = 0;
    RowMatrix cols;
};

/// weight shape (out, in, k, k), bias shape (out).
FeatureMap conv2d_forward(const FeatureMap& input, const Param& weight, const Param& bias,
                          const ConvGeometry& g, ConvCache* cache);
/// Accumulates into weight.grad / bias.grad and returns d(input).
FeatureMap conv2d_backward(const FeatureMap& d_output, Param& weight, Param& bias,
                           const ConvGeometry& g, const ConvCache& cache);

void relu_inplace(FeatureMap& x);
/// Masks `grad` where the forward output was not positive.
void relu_backward_inplace(FeatureMap& grad, const FeatureMap& output);

struct PoolCache {
    int in_height = 0;
    int in_width = 0;
    std::vector<int> argmax;
};

/// Max pooling with kernel = stride = `factor`, floor mode.
FeatureMap max_pool_forward(const FeatureMap& input, int factor, PoolCache* cache);
FeatureMap max_pool_backward(const FeatureMap& d_output, const PoolCache& cache);

struct LrnConfig {
    int size = 5;
    double k = 2.0;
    double alpha = 1e-4;
    double beta = 0.75;
};

struct LrnCache {
    FeatureMap input;
    FeatureMap scale;
};

/// Cross-channel local response normalization:
///   y_c = x_c / (k + alpha/n * sum_{c' in window(c)} x_c'^2)^beta
FeatureMap lrn_forward(const FeatureMap& input, const LrnConfig& cfg, LrnCache* cache);
FeatureMap lrn_backward(const FeatureMap& d_output, const LrnConfig& cfg, const LrnCache& cache);

}  // namespace fanet
