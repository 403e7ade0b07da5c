#pragma once

#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core/buffer.hpp"

#include "core/params.hpp"
#include "core/tensor.hpp"

namespace fanet {

struct QaaConfig {
    int embed_dim = 64;  ///< d
    bool bias = false;
};

/// embed: d x 2C', rgb_gate / t_gate: C' x d.
struct QAAParams {
    Param embed;
    Param rgb_gate;
    Param t_gate;
    std::optional<Param> embed_bias;
    std::optional<Param> rgb_bias;
    std::optional<Param> t_bias;

    int channels() const { return rgb_gate.shape[0]; }
    int embed_dim() const { return embed.shape[0]; }
};

QAAParams make_qaa_params(const QaaConfig& cfg, int channels, std::mt19937_64& rng);

/// Per-channel modality weights; a[c] + b[c] = 1.
struct AttentionVectors {
    Buffer a;
    Buffer b;

    double mean_a() const;
    double mean_b() const;
};

/// f_c = mean over the spatial plane of channel c.
Buffer global_avg_pool(const FeatureMap& x);

/// z = ReLU(W f)
Buffer embed(std::span<const double> f, const QAAParams& params);

/// Two-way softmax per channel with max subtraction.
AttentionVectors attention_from_logits(std::span<const double> v_rgb, std::span<const double> v_t);

/// V_rgb = ReLU(W21 z), V_t = ReLU(W22 z), then attention_from_logits.
AttentionVectors modality_attention(std::span<const double> z, const QAAParams& params);

/// F_c = a_c X_rgb^c + b_c X_t^c, clamped to the per-position [min, max] of
/// the two inputs so the convex bound survives rounding.
FeatureMap fuse(const FeatureMap& x_rgb, const FeatureMap& x_t, const AttentionVectors& att);

struct QaaResult {
    FeatureMap fused;
    AttentionVectors attention;
};

struct QaaCache {
    FeatureMap x_rgb;
    FeatureMap x_t;
    Buffer f;
    Buffer z;
    Buffer v_rgb;
    Buffer v_t;
    AttentionVectors attention;
};

QaaResult qaa_forward(const FeatureMap& x_rgb, const FeatureMap& x_t, const QAAParams& params,
                      QaaCache* cache = nullptr);

/// Returns (dX_rgb, dX_t); accumulates parameter gradients.
std::pair<FeatureMap, FeatureMap> qaa_backward(const FeatureMap& d_fused, QAAParams& params, const QaaCache& cache);

}  // namespace fanet
