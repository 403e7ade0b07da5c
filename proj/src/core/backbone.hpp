#pragma once

#include <array>
#include <random>
#include <string>

#include "core/layers.hpp"

namespace fanet {

struct ConvLayerConfig {
    int out_channels = 16;
    int kernel = 3;
    int stride = 1;
    int dilation = 1;
    int pad = 0;

    ConvGeometry geometry() const { return {kernel, stride, pad, dilation}; }
};

/// Three conv layers; a max pool (kernel = stride = `pool`) follows conv1 only.
struct BackboneConfig {
    std::array<ConvLayerConfig, 3> layers;
    int pool = 2;

    static BackboneConfig toy();
    static BackboneConfig paper_scale();

    int total_stride() const;
    void validate() const;
};

struct Shape3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    friend bool operator==(const Shape3&, const Shape3&) = default;
};

struct BackboneShapes {
    Shape3 f1;
    Shape3 f2;
    Shape3 f3;
    int total_stride = 1;
};

BackboneShapes output_shapes(const BackboneConfig& cfg, int input_height, int input_width);

/// Smallest square input whose conv3 output is at least 3x3.
int min_input_size(const BackboneConfig& cfg);

/// Smallest size >= max(size, min_input_size) for which conv1 and conv2
/// resolutions are integer multiples of conv3's along this axis.
int aligned_input_size(const BackboneConfig& cfg, int size);

struct BackboneParams {
    std::array<Param, 3> weight;
    std::array<Param, 3> bias;
};

/// `in_channels[i]` is the input width of conv(i+1): 3 for a plain stream,
/// 6 for the early-fusion stack, 2*C1 at conv2 for mid fusion.
BackboneParams make_backbone_params(const BackboneConfig& cfg, const std::array<int, 3>& in_channels,
                                    std::mt19937_64& rng);

struct BackboneFeatures {
    FeatureMap f1;  ///< conv1 after ReLU, before pooling
    FeatureMap f2;
    FeatureMap f3;
};

struct StageCache {
    ConvCache conv;
    FeatureMap output;
};

/// conv(layer) followed by ReLU.
FeatureMap conv_stage_forward(int layer, const FeatureMap& input, const BackboneConfig& cfg,
                              const BackboneParams& params, StageCache* cache);
/// Returns d(input); accumulates parameter gradients.
FeatureMap conv_stage_backward(int layer, FeatureMap d_output, const BackboneConfig& cfg, BackboneParams& params,
                               const StageCache& cache);

struct BackboneCache {
    std::array<StageCache, 3> stage;
    PoolCache pool;
};

/// Single-stream forward. Both modalities go through this with the same
/// parameter set.
BackboneFeatures extract_features(const FeatureMap& image, const BackboneConfig& cfg, const BackboneParams& params,
                                  BackboneCache* cache = nullptr);

/// Gradients w.r.t. each of F1, F2, F3 (any may be empty = zero).
void backbone_backward(const FeatureMap& d_f1, const FeatureMap& d_f2, const FeatureMap& d_f3,
                       const BackboneConfig& cfg, BackboneParams& params, const BackboneCache& cache);

}  // namespace fanet
