#include "core/backbone.hpp"

#include "core/error.hpp"

namespace fanet {

BackboneConfig BackboneConfig::toy() {
    BackboneConfig c;
    c.layers[0] = {16, 5, 2, 1, 2};
    c.layers[1] = {32, 3, 1, 1, 1};
    c.layers[2] = {64, 3, 1, 3, 3};
    c.pool = 2;
    return c;
}

BackboneConfig BackboneConfig::paper_scale() {
    BackboneConfig c;
    c.layers[0] = {96, 7, 2, 1, 0};
    c.layers[1] = {256, 5, 2, 1, 2};
    c.layers[2] = {512, 3, 1, 3, 3};
    c.pool = 2;
    return c;
}

int BackboneConfig::total_stride() const {
    return layers[0].stride * pool * layers[1].stride * layers[2].stride;
}

void BackboneConfig::validate() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const std::string name = "backbone conv" + std::to_string(i + 1);
        require(l.out_channels > 0 && l.kernel > 0 && l.stride > 0 && l.dilation > 0 && l.pad >= 0,
                name + ": channels, kernel, stride, dilation must be positive and pad non-negative");
    }
    require(layers[2].dilation == 3, "backbone conv3 must use dilation 3");
    require(pool >= 1, "backbone pool factor must be >= 1");
}

BackboneShapes output_shapes(const BackboneConfig& cfg, int input_height, int input_width) {
    BackboneShapes s;
    int h = conv_output_size(input_height, cfg.layers[0].geometry());
    int w = conv_output_size(input_width, cfg.layers[0].geometry());
    s.f1 = {cfg.layers[0].out_channels, h, w};
    h /= cfg.pool;
    w /= cfg.pool;
    h = conv_output_size(h, cfg.layers[1].geometry());
    w = conv_output_size(w, cfg.layers[1].geometry());
    s.f2 = {cfg.layers[1].out_channels, h, w};
    h = conv_output_size(h, cfg.layers[2].geometry());
    w = conv_output_size(w, cfg.layers[2].geometry());
    s.f3 = {cfg.layers[2].out_channels, h, w};
    s.total_stride = cfg.total_stride();
    return s;
}

int min_input_size(const BackboneConfig& cfg) {
    for (int n = 1; n <= 1 << 14; ++n) {
        const auto s = output_shapes(cfg, n, n);
        if (s.f3.height >= 3) {
            return n;
        }
    }
    fail(ErrorKind::InvalidArgument, "backbone config never produces a 3x3 output");
}

int aligned_input_size(const BackboneConfig& cfg, int size) {
    for (int n = std::max(size, min_input_size(cfg)); n <= (1 << 15); ++n) {
        const auto s = output_shapes(cfg, n, n);
        if (s.f3.height >= 3 && s.f1.height % s.f3.height == 0 && s.f2.height % s.f3.height == 0) {
            return n;
        }
    }
    fail(ErrorKind::InvalidArgument, "no aligned input size found for backbone config");
}

BackboneParams make_backbone_params(const BackboneConfig& cfg, const std::array<int, 3>& in_channels,
                                    std::mt19937_64& rng) {
    cfg.validate();
    BackboneParams p;
    for (int i = 0; i < 3; ++i) {
        const auto& l = cfg.layers[static_cast<std::size_t>(i)];
        const std::string prefix = "backbone.conv" + std::to_string(i + 1);
        auto& w = p.weight[static_cast<std::size_t>(i)];
        auto& b = p.bias[static_cast<std::size_t>(i)];
        w = Param(prefix + ".weight", {l.out_channels, in_channels[static_cast<std::size_t>(i)], l.kernel, l.kernel},
                  ParamGroup::Conv);
        b = Param(prefix + ".bias", {l.out_channels}, ParamGroup::Conv);
        init_he_uniform(w, in_channels[static_cast<std::size_t>(i)] * l.kernel * l.kernel, rng);
    }
    return p;
}

FeatureMap conv_stage_forward(int layer, const FeatureMap& input, const BackboneConfig& cfg,
                              const BackboneParams& params, StageCache* cache) {
    const auto idx = static_cast<std::size_t>(layer);
    FeatureMap out = conv2d_forward(input, params.weight[idx], params.bias[idx], cfg.layers[idx].geometry(),
                                    cache ? &cache->conv : nullptr);
    relu_inplace(out);
    if (cache) {
        cache->output = out;
    }
    return out;
}

FeatureMap conv_stage_backward(int layer, FeatureMap d_output, const BackboneConfig& cfg, BackboneParams& params,
                               const StageCache& cache) {
    const auto idx = static_cast<std::size_t>(layer);
    relu_backward_inplace(d_output, cache.output);
    return conv2d_backward(d_output, params.weight[idx], params.bias[idx], cfg.layers[idx].geometry(), cache.conv);
}

BackboneFeatures extract_features(const FeatureMap& image, const BackboneConfig& cfg, const BackboneParams& params,
                                  BackboneCache* cache) {
    const auto shapes = output_shapes(cfg, image.height, image.width);
    if (shapes.f3.height < 3 || shapes.f3.width < 3) {
        fail(ErrorKind::InvalidArgument, "extract_features: input " + image.shape_string() +
                                             " is below the minimum size " +
                                             std::to_string(min_input_size(cfg)) + " (conv3 output < 3x3)");
    }
    BackboneFeatures f;
    f.f1 = conv_stage_forward(0, image, cfg, params, cache ? &cache->stage[0] : nullptr);
    const FeatureMap pooled = max_pool_forward(f.f1, cfg.pool, cache ? &cache->pool : nullptr);
    f.f2 = conv_stage_forward(1, pooled, cfg, params, cache ? &cache->stage[1] : nullptr);
    f.f3 = conv_stage_forward(2, f.f2, cfg, params, cache ? &cache->stage[2] : nullptr);
    return f;
}

void backbone_backward(const FeatureMap& d_f1, const FeatureMap& d_f2, const FeatureMap& d_f3,
                       const BackboneConfig& cfg, BackboneParams& params, const BackboneCache& cache) {
    FeatureMap g2 = d_f2.empty() ? FeatureMap(cache.stage[1].output.channels, cache.stage[1].output.height,
                                              cache.stage[1].output.width)
                                 : d_f2;
    if (!d_f3.empty()) {
        add_into(g2, conv_stage_backward(2, d_f3, cfg, params, cache.stage[2]));
    }
    FeatureMap g_pooled = conv_stage_backward(1, std::move(g2), cfg, params, cache.stage[1]);
    FeatureMap g1 = max_pool_backward(g_pooled, cache.pool);
    if (!d_f1.empty()) {
        add_into(g1, d_f1);
    }
    conv_stage_backward(0, std::move(g1), cfg, params, cache.stage[0]);
}

}  // namespace fanet
