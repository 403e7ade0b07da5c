#pragma once

#include <array>
#include <random>
#include <string>

#include "core/layers.hpp"

namespace fanet {

enum class HfaOrder {
    ConvReluLrn,  ///< default: 1x1 conv -> ReLU -> LRN
    LrnConvRelu,
};

struct HfaConfig {
    int channels = 32;  ///< C_agg per level; the aggregate has 3 * channels
    LrnConfig lrn;
    HfaOrder order = HfaOrder::ConvReluLrn;
};

/// 1x1 compression kernels, one per backbone level.
struct HFAParams {
    std::array<Param, 3> weight;
    std::array<Param, 3> bias;
};

HFAParams make_hfa_params(const HfaConfig& cfg, const std::array<int, 3>& level_channels, const std::string& prefix,
                          std::mt19937_64& rng);

struct UnifyCache {
    std::array<int, 2> factor{1, 1};
    std::array<PoolCache, 2> pool;
};

/// Max-pools F1 and F2 down to F3's resolution (kernel = stride = ratio).
/// Throws when a ratio is not an exact integer.
std::array<FeatureMap, 3> unify_resolution(const FeatureMap& f1, const FeatureMap& f2, const FeatureMap& f3,
                                           UnifyCache* cache = nullptr);

struct HfaCache {
    UnifyCache unify;
    std::array<ConvCache, 3> conv;
    std::array<FeatureMap, 3> relu_out;
    std::array<LrnCache, 3> lrn;
};

/// unify -> per-level (1x1 conv, ReLU, LRN) -> channel concatenation.
FeatureMap aggregate(const FeatureMap& f1, const FeatureMap& f2, const FeatureMap& f3, const HfaConfig& cfg,
                     const HFAParams& params, HfaCache* cache = nullptr);

/// Returns gradients for (F1, F2, F3) and accumulates parameter gradients.
std::array<FeatureMap, 3> aggregate_backward(const FeatureMap& d_out, const HfaConfig& cfg, HFAParams& params,
                                             const HfaCache& cache);

}  // namespace fanet
