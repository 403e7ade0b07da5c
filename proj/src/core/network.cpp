#include "core/network.hpp"

#include <numeric>

#include "core/error.hpp"

namespace fanet {

NetworkConfig NetworkConfig::toy() {
    NetworkConfig c;
    c.backbone = BackboneConfig::toy();
    c.hfa.channels = 32;
    c.qaa.embed_dim = 64;
    c.head.fc1 = 256;
    c.head.fc2 = 128;
    return c;
}

NetworkConfig NetworkConfig::paper_scale() {
    NetworkConfig c;
    c.backbone = BackboneConfig::paper_scale();
    c.hfa.channels = 128;
    c.qaa.embed_dim = 256;
    c.head.fc1 = 1024;
    c.head.fc2 = 512;
    return c;
}

int NetworkConfig::fused_channels() const {
    const int c3 = backbone.layers[2].out_channels;
    switch (variant) {
        case Variant::Full: return 3 * hfa.channels;
        case Variant::FA: return 6 * hfa.channels;
        case Variant::MA:
        case Variant::Early:
        case Variant::Mid: return c3;
        case Variant::Late: return 2 * c3;
    }
    return 0;
}

int NetworkConfig::roi_feature_dim() const { return fused_channels() * head.roi_size * head.roi_size; }

namespace {

std::array<int, 3> backbone_inputs(const NetworkConfig& cfg) {
    const int c1 = cfg.backbone.layers[0].out_channels;
    const int c2 = cfg.backbone.layers[1].out_channels;
    switch (cfg.variant) {
        case Variant::Early: return {6, c1, c2};
        case Variant::Mid: return {3, 2 * c1, c2};
        default: return {3, c1, c2};
    }
}

std::array<int, 3> level_channels(const NetworkConfig& cfg) {
    return {cfg.backbone.layers[0].out_channels, cfg.backbone.layers[1].out_channels,
            cfg.backbone.layers[2].out_channels};
}

template <typename P, typename M>
std::vector<P*> collect(M& m) {
    std::vector<P*> out;
    for (std::size_t i = 0; i < 3; ++i) {
        out.push_back(&m.backbone.weight[i]);
        out.push_back(&m.backbone.bias[i]);
    }
    for (auto* hfa : {&m.hfa_rgb, &m.hfa_t}) {
        if (*hfa) {
            for (std::size_t i = 0; i < 3; ++i) {
                out.push_back(&(*hfa)->weight[i]);
                out.push_back(&(*hfa)->bias[i]);
            }
        }
    }
    if (m.qaa) {
        out.push_back(&m.qaa->embed);
        if (m.qaa->embed_bias) out.push_back(&*m.qaa->embed_bias);
        out.push_back(&m.qaa->rgb_gate);
        if (m.qaa->rgb_bias) out.push_back(&*m.qaa->rgb_bias);
        out.push_back(&m.qaa->t_gate);
        if (m.qaa->t_bias) out.push_back(&*m.qaa->t_bias);
    }
    out.push_back(&m.head.fc1_weight);
    out.push_back(&m.head.fc1_bias);
    out.push_back(&m.head.fc2_weight);
    out.push_back(&m.head.fc2_bias);
    for (auto& b : m.head.branches) {
        out.push_back(&b.weight);
        out.push_back(&b.bias);
    }
    return out;
}

}  // namespace

std::vector<Param*> ModelParams::parameters() { return collect<Param>(*this); }
std::vector<const Param*> ModelParams::parameters() const { return collect<const Param>(*this); }

std::vector<const Param*> ModelParams::feature_parameters() const {
    std::vector<const Param*> out;
    for (const Param* p : parameters()) {
        if (p->name.rfind("head.", 0) != 0) {
            out.push_back(p);
        }
    }
    return out;
}

std::vector<Param*> ModelParams::head_parameters() {
    std::vector<Param*> out;
    for (Param* p : parameters()) {
        if (p->name.rfind("head.", 0) == 0) {
            out.push_back(p);
        }
    }
    return out;
}

std::size_t ModelParams::parameter_count() const {
    const auto ps = parameters();
    return std::accumulate(ps.begin(), ps.end(), std::size_t{0},
                           [](std::size_t n, const Param* p) { return n + p->size(); });
}

std::uint64_t ModelParams::checksum() const { return fanet::checksum(parameters()); }
std::uint64_t ModelParams::feature_checksum() const { return fanet::checksum(feature_parameters()); }

void ModelParams::zero_grad() {
    for (Param* p : parameters()) {
        p->zero_grad();
    }
}

ModelParams make_model(const NetworkConfig& cfg, int num_domains, std::uint64_t seed) {
    cfg.backbone.validate();
    std::mt19937_64 rng(seed);
    ModelParams m;
    m.config = cfg;
    m.backbone = make_backbone_params(cfg.backbone, backbone_inputs(cfg), rng);
    const auto& spec = variant_spec(cfg.variant);
    if (spec.has_hfa) {
        m.hfa_rgb = make_hfa_params(cfg.hfa, level_channels(cfg), "hfa_rgb", rng);
        m.hfa_t = make_hfa_params(cfg.hfa, level_channels(cfg), "hfa_t", rng);
    }
    if (spec.has_qaa) {
        const int c = cfg.variant == Variant::MA ? cfg.backbone.layers[2].out_channels : 3 * cfg.hfa.channels;
        m.qaa = make_qaa_params(cfg.qaa, c, rng);
    }
    m.head = make_head_params(cfg.head, cfg.roi_feature_dim(), num_domains, rng);
    return m;
}

FramePair prepare_frame(const Image& rgb, const Image& thermal, const NetworkConfig& cfg) {
    require(rgb.channels == 3, "prepare_frame: rgb frame must have 3 channels");
    require(thermal.channels == 1 || thermal.channels == 3, "prepare_frame: thermal frame must have 1 or 3 channels");
    require(rgb.width == thermal.width && rgb.height == thermal.height,
            "prepare_frame: rgb and thermal frames differ in size");
    const int h = aligned_input_size(cfg.backbone, rgb.height);
    const int w = aligned_input_size(cfg.backbone, rgb.width);
    FramePair out{FeatureMap(3, h, w), FeatureMap(3, h, w)};
    for (int c = 0; c < 3; ++c) {
        const double mean = cfg.input_mean[static_cast<std::size_t>(c)];
        for (int y = 0; y < rgb.height; ++y) {
            for (int x = 0; x < rgb.width; ++x) {
                out.rgb.at(c, y, x) = rgb.at(x, y, c) / 255.0 - mean;
                const int tc = thermal.channels == 1 ? 0 : c;
                out.thermal.at(c, y, x) = thermal.at(x, y, tc) / 255.0 - mean;
            }
        }
    }
    return out;
}

FusionResult forward_features(const ModelParams& model, const FramePair& frame, FusionCache* cache) {
    const auto& cfg = model.config;
    const auto& bb = cfg.backbone;
    FusionResult result;
    switch (cfg.variant) {
        case Variant::Full:
        case Variant::FA: {
            const auto fr = extract_features(frame.rgb, bb, model.backbone, cache ? &cache->backbone_rgb : nullptr);
            const auto ft = extract_features(frame.thermal, bb, model.backbone, cache ? &cache->backbone_t : nullptr);
            const auto xr = aggregate(fr.f1, fr.f2, fr.f3, cfg.hfa, *model.hfa_rgb, cache ? &cache->hfa_rgb : nullptr);
            const auto xt = aggregate(ft.f1, ft.f2, ft.f3, cfg.hfa, *model.hfa_t, cache ? &cache->hfa_t : nullptr);
            if (cfg.variant == Variant::Full) {
                auto q = qaa_forward(xr, xt, *model.qaa, cache ? &cache->qaa : nullptr);
                result.fused = std::move(q.fused);
                result.attention = std::move(q.attention);
            } else {
                const std::array<const FeatureMap*, 2> parts{&xr, &xt};
                result.fused = concat_channels(parts);
            }
            break;
        }
        case Variant::MA: {
            const auto fr = extract_features(frame.rgb, bb, model.backbone, cache ? &cache->backbone_rgb : nullptr);
            const auto ft = extract_features(frame.thermal, bb, model.backbone, cache ? &cache->backbone_t : nullptr);
            auto q = qaa_forward(fr.f3, ft.f3, *model.qaa, cache ? &cache->qaa : nullptr);
            result.fused = std::move(q.fused);
            result.attention = std::move(q.attention);
            break;
        }
        case Variant::Early: {
            const std::array<const FeatureMap*, 2> parts{&frame.rgb, &frame.thermal};
            const auto stacked = concat_channels(parts);
            result.fused = extract_features(stacked, bb, model.backbone, cache ? &cache->backbone_rgb : nullptr).f3;
            break;
        }
        case Variant::Late: {
            const auto fr = extract_features(frame.rgb, bb, model.backbone, cache ? &cache->backbone_rgb : nullptr);
            const auto ft = extract_features(frame.thermal, bb, model.backbone, cache ? &cache->backbone_t : nullptr);
            const std::array<const FeatureMap*, 2> parts{&fr.f3, &ft.f3};
            result.fused = concat_channels(parts);
            break;
        }
        case Variant::Mid: {
            if (output_shapes(bb, frame.rgb.height, frame.rgb.width).f3.height < 3) {
                fail(ErrorKind::InvalidArgument, "forward_features: input " + frame.rgb.shape_string() +
                                                     " is below the backbone minimum size");
            }
            const auto c1r = conv_stage_forward(0, frame.rgb, bb, model.backbone, cache ? &cache->conv1_rgb : nullptr);
            const auto c1t =
                conv_stage_forward(0, frame.thermal, bb, model.backbone, cache ? &cache->conv1_t : nullptr);
            const auto pr = max_pool_forward(c1r, bb.pool, cache ? &cache->pool_rgb : nullptr);
            const auto pt = max_pool_forward(c1t, bb.pool, cache ? &cache->pool_t : nullptr);
            const std::array<const FeatureMap*, 2> parts{&pr, &pt};
            const auto f2 = conv_stage_forward(1, concat_channels(parts), bb, model.backbone,
                                               cache ? &cache->conv2 : nullptr);
            result.fused = conv_stage_forward(2, f2, bb, model.backbone, cache ? &cache->conv3 : nullptr);
            break;
        }
    }
    return result;
}

void backward_features(ModelParams& model, const FeatureMap& d_fused, const FusionCache& cache) {
    const auto& cfg = model.config;
    const auto& bb = cfg.backbone;
    const FeatureMap none;
    switch (cfg.variant) {
        case Variant::Full:
        case Variant::FA: {
            FeatureMap dxr;
            FeatureMap dxt;
            if (cfg.variant == Variant::Full) {
                std::tie(dxr, dxt) = qaa_backward(d_fused, *model.qaa, cache.qaa);
            } else {
                const std::array<int, 2> counts{3 * cfg.hfa.channels, 3 * cfg.hfa.channels};
                auto parts = split_channels(d_fused, counts);
                dxr = std::move(parts[0]);
                dxt = std::move(parts[1]);
            }
            const auto gr = aggregate_backward(dxr, cfg.hfa, *model.hfa_rgb, cache.hfa_rgb);
            const auto gt = aggregate_backward(dxt, cfg.hfa, *model.hfa_t, cache.hfa_t);
            backbone_backward(gr[0], gr[1], gr[2], bb, model.backbone, cache.backbone_rgb);
            backbone_backward(gt[0], gt[1], gt[2], bb, model.backbone, cache.backbone_t);
            break;
        }
        case Variant::MA: {
            const auto [dr, dt] = qaa_backward(d_fused, *model.qaa, cache.qaa);
            backbone_backward(none, none, dr, bb, model.backbone, cache.backbone_rgb);
            backbone_backward(none, none, dt, bb, model.backbone, cache.backbone_t);
            break;
        }
        case Variant::Early:
            backbone_backward(none, none, d_fused, bb, model.backbone, cache.backbone_rgb);
            break;
        case Variant::Late: {
            const int c3 = bb.layers[2].out_channels;
            const std::array<int, 2> counts{c3, c3};
            const auto parts = split_channels(d_fused, counts);
            backbone_backward(none, none, parts[0], bb, model.backbone, cache.backbone_rgb);
            backbone_backward(none, none, parts[1], bb, model.backbone, cache.backbone_t);
            break;
        }
        case Variant::Mid: {
            const auto d2 = conv_stage_backward(2, d_fused, bb, model.backbone, cache.conv3);
            const auto dcat = conv_stage_backward(1, d2, bb, model.backbone, cache.conv2);
            const int c1 = bb.layers[0].out_channels;
            const std::array<int, 2> counts{c1, c1};
            const auto parts = split_channels(dcat, counts);
            conv_stage_backward(0, max_pool_backward(parts[0], cache.pool_rgb), bb, model.backbone, cache.conv1_rgb);
            conv_stage_backward(0, max_pool_backward(parts[1], cache.pool_t), bb, model.backbone, cache.conv1_t);
            break;
        }
    }
}

}  // namespace fanet
