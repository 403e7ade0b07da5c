#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "core/backbone.hpp"
#include "core/head.hpp"
#include "core/hfa.hpp"
#include "core/image.hpp"
#include "core/qaa.hpp"
#include "core/variant.hpp"

namespace fanet {

struct NetworkConfig {
    Variant variant = Variant::Full;
    BackboneConfig backbone = BackboneConfig::toy();
    HfaConfig hfa;
    QaaConfig qaa;
    HeadConfig head;
    std::array<double, 3> input_mean{0.0, 0.0, 0.0};

    static NetworkConfig toy();
    static NetworkConfig paper_scale();

    /// Channel count of the map the head pools from.
    int fused_channels() const;
    int roi_feature_dim() const;
    double stride() const { return backbone.total_stride(); }
};

/// Every learnable tensor of one network. There is exactly one backbone
/// parameter set; both modality streams read it.
struct ModelParams {
    NetworkConfig config;
    BackboneParams backbone;
    std::optional<HFAParams> hfa_rgb;
    std::optional<HFAParams> hfa_t;
    std::optional<QAAParams> qaa;
    HeadParams head;

    std::vector<Param*> parameters();
    std::vector<const Param*> parameters() const;
    /// Backbone, HFA and QAA (everything frozen during online tracking).
    std::vector<const Param*> feature_parameters() const;
    std::vector<Param*> head_parameters();

    std::size_t parameter_count() const;
    std::uint64_t checksum() const;
    std::uint64_t feature_checksum() const;
    void zero_grad();
};

ModelParams make_model(const NetworkConfig& cfg, int num_domains, std::uint64_t seed);

/// Normalized, zero-padded network inputs for one RGB-T frame pair.
struct FramePair {
    FeatureMap rgb;
    FeatureMap thermal;
};

/// Scales pixels to [0, 1], subtracts input_mean, replicates single-channel
/// thermal to three channels, and pads bottom/right to an aligned size.
FramePair prepare_frame(const Image& rgb, const Image& thermal, const NetworkConfig& cfg);

struct FusionResult {
    FeatureMap fused;
    std::optional<AttentionVectors> attention;
};

struct FusionCache {
    BackboneCache backbone_rgb;
    BackboneCache backbone_t;
    HfaCache hfa_rgb;
    HfaCache hfa_t;
    QaaCache qaa;
    // mid fusion
    StageCache conv1_rgb;
    StageCache conv1_t;
    PoolCache pool_rgb;
    PoolCache pool_t;
    StageCache conv2;
    StageCache conv3;
};

/// Whole-frame feature path of the configured variant.
FusionResult forward_features(const ModelParams& model, const FramePair& frame, FusionCache* cache = nullptr);
/// Backpropagates d(fused) into backbone/HFA/QAA gradients.
void backward_features(ModelParams& model, const FeatureMap& d_fused, const FusionCache& cache);

}  // namespace fanet
