#pragma once

#include <Eigen/Dense>

#include <random>
#include <span>
#include <vector>

#include "core/geometry.hpp"
#include "core/params.hpp"
#include "core/tensor.hpp"

namespace fanet {

struct HeadConfig {
    int fc1 = 256;
    int fc2 = 128;
    int roi_size = 3;     ///< P: RoIAlign output is C x P x P
    int roi_samples = 2;  ///< bilinear samples per bin along each axis
    double dropout1 = 0.5;
    double dropout2 = 0.5;
};

/// One domain-specific two-unit classifier (fc3).
struct Branch {
    Param weight;  ///< 2 x fc2
    Param bias;    ///< 2
};

struct HeadParams {
    Param fc1_weight;
    Param fc1_bias;
    Param fc2_weight;
    Param fc2_bias;
    std::vector<Branch> branches;
    double dropout1 = 0.5;
    double dropout2 = 0.5;

    int input_dim() const { return fc1_weight.shape[1]; }
    int num_branches() const { return static_cast<int>(branches.size()); }
};

HeadParams make_head_params(const HeadConfig& cfg, int input_dim, int num_branches, std::mt19937_64& rng);
Branch make_branch(int index, int fc2, std::mt19937_64& rng);

/// Keeps fc1/fc2, discards every fc3 branch and installs `k_new` fresh ones.
HeadParams replace_branches(const HeadParams& params, int k_new, std::mt19937_64& rng);

/// Column i holds the flattened C x P x P RoIAlign feature of boxes[i].
using RoiBatch = Eigen::MatrixXd;

/// Boxes are in image pixels; grid coordinate = pixel / stride - 0.5 (cell
/// centers). Each of the P x P bins averages samples x samples bilinear taps.
/// Sample coordinates are clamped into the map.
RoiBatch roi_align(const FeatureMap& features, std::span<const Box> boxes, double stride, int roi_size,
                   int samples);

/// Adjoint of roi_align: scatters column gradients back onto a map of the
/// given shape.
FeatureMap roi_align_backward(const RoiBatch& d_features, int channels, int height, int width,
                              std::span<const Box> boxes, double stride, int roi_size, int samples);

struct TrunkCache {
    Eigen::MatrixXd input;
    Eigen::MatrixXd h1;     ///< post-ReLU fc1
    Eigen::MatrixXd mask1;  ///< scaled dropout mask (empty in eval mode)
    Eigen::MatrixXd h2;
    Eigen::MatrixXd mask2;
    Eigen::MatrixXd out;    ///< post-dropout fc2 activations
};

/// flatten -> fc1 -> ReLU -> dropout -> fc2 -> ReLU -> dropout. Returns the
/// fc2 activations (fc2 x N). `rng` is only used when train_mode is set.
Eigen::MatrixXd trunk_forward(const RoiBatch& x, const HeadParams& params, bool train_mode, std::mt19937_64* rng,
                              TrunkCache* cache = nullptr);
RoiBatch trunk_backward(const Eigen::MatrixXd& d_out, HeadParams& params, const TrunkCache& cache);

/// Raw two-unit logits (2 x N); row 1 is the positive score f+.
Eigen::MatrixXd branch_forward(const Eigen::MatrixXd& trunk_out, const Branch& branch);
Eigen::MatrixXd branch_backward(const Eigen::MatrixXd& d_logits, const Eigen::MatrixXd& trunk_out, Branch& branch);

/// trunk_forward followed by the given domain's branch.
Eigen::MatrixXd fc_forward(const RoiBatch& x, const HeadParams& params, int domain, bool train_mode,
                           std::mt19937_64* rng);

}  // namespace fanet
