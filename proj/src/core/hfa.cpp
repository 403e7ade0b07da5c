#include "core/hfa.hpp"

#include "core/error.hpp"

namespace fanet {

HFAParams make_hfa_params(const HfaConfig& cfg, const std::array<int, 3>& level_channels, const std::string& prefix,
                          std::mt19937_64& rng) {
    require(cfg.channels > 0, "hfa: channels must be positive");
    HFAParams p;
    for (std::size_t i = 0; i < 3; ++i) {
        const std::string name = prefix + ".compress" + std::to_string(i + 1);
        p.weight[i] = Param(name + ".weight", {cfg.channels, level_channels[i], 1, 1}, ParamGroup::Conv);
        p.bias[i] = Param(name + ".bias", {cfg.channels}, ParamGroup::Conv);
        init_he_uniform(p.weight[i], level_channels[i], rng);
    }
    return p;
}

namespace {

int integer_ratio(const FeatureMap& f, const FeatureMap& f3, const char* which) {
    const bool ok = f3.height > 0 && f3.width > 0 && f.height % f3.height == 0 && f.width % f3.width == 0 &&
                    f.height / f3.height == f.width / f3.width;
    if (!ok) {
        fail(ErrorKind::InvalidArgument, std::string("unify_resolution: ") + which + " resolution " +
                                             f.shape_string() + " is not an integer multiple of F3 " +
                                             f3.shape_string());
    }
    return f.height / f3.height;
}

}  // namespace

std::array<FeatureMap, 3> unify_resolution(const FeatureMap& f1, const FeatureMap& f2, const FeatureMap& f3,
                                           UnifyCache* cache) {
    const int r1 = integer_ratio(f1, f3, "F1");
    const int r2 = integer_ratio(f2, f3, "F2");
    if (cache) {
        cache->factor = {r1, r2};
    }
    return {max_pool_forward(f1, r1, cache ? &cache->pool[0] : nullptr),
            max_pool_forward(f2, r2, cache ? &cache->pool[1] : nullptr), f3};
}

FeatureMap aggregate(const FeatureMap& f1, const FeatureMap& f2, const FeatureMap& f3, const HfaConfig& cfg,
                     const HFAParams& params, HfaCache* cache) {
    const std::array<const FeatureMap*, 3> inputs{&f1, &f2, &f3};
    for (std::size_t i = 0; i < 3; ++i) {
        require(params.weight[i].shape[1] == inputs[i]->channels,
                "hfa aggregate: level " + std::to_string(i + 1) + " has " + std::to_string(inputs[i]->channels) +
                    " channels, params expect " + std::to_string(params.weight[i].shape[1]));
    }
    auto unified = unify_resolution(f1, f2, f3, cache ? &cache->unify : nullptr);
    const ConvGeometry one{1, 1, 0, 1};
    std::array<FeatureMap, 3> levels;
    for (std::size_t i = 0; i < 3; ++i) {
        ConvCache* conv_cache = cache ? &cache->conv[i] : nullptr;
        LrnCache* lrn_cache = cache ? &cache->lrn[i] : nullptr;
        if (cfg.order == HfaOrder::ConvReluLrn) {
            FeatureMap c = conv2d_forward(unified[i], params.weight[i], params.bias[i], one, conv_cache);
            relu_inplace(c);
            if (cache) {
                cache->relu_out[i] = c;
            }
            levels[i] = lrn_forward(c, cfg.lrn, lrn_cache);
        } else {
            FeatureMap n = lrn_forward(unified[i], cfg.lrn, lrn_cache);
            levels[i] = conv2d_forward(n, params.weight[i], params.bias[i], one, conv_cache);
            relu_inplace(levels[i]);
            if (cache) {
                cache->relu_out[i] = levels[i];
            }
        }
    }
    const std::array<const FeatureMap*, 3> parts{&levels[0], &levels[1], &levels[2]};
    return concat_channels(parts);
}

std::array<FeatureMap, 3> aggregate_backward(const FeatureMap& d_out, const HfaConfig& cfg, HFAParams& params,
                                             const HfaCache& cache) {
    const std::array<int, 3> counts{cfg.channels, cfg.channels, cfg.channels};
    auto grads = split_channels(d_out, counts);
    const ConvGeometry one{1, 1, 0, 1};
    std::array<FeatureMap, 3> d_unified;
    for (std::size_t i = 0; i < 3; ++i) {
        if (cfg.order == HfaOrder::ConvReluLrn) {
            FeatureMap g = lrn_backward(grads[i], cfg.lrn, cache.lrn[i]);
            relu_backward_inplace(g, cache.relu_out[i]);
            d_unified[i] = conv2d_backward(g, params.weight[i], params.bias[i], one, cache.conv[i]);
        } else {
            FeatureMap g = std::move(grads[i]);
            relu_backward_inplace(g, cache.relu_out[i]);
            g = conv2d_backward(g, params.weight[i], params.bias[i], one, cache.conv[i]);
            d_unified[i] = lrn_backward(g, cfg.lrn, cache.lrn[i]);
        }
    }
    return {max_pool_backward(d_unified[0], cache.unify.pool[0]),
            max_pool_backward(d_unified[1], cache.unify.pool[1]), std::move(d_unified[2])};
}

}  // namespace fanet
