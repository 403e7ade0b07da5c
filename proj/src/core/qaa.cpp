#include "core/qaa.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"

namespace fanet {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMat = Eigen::Map<const RowMatrix>;
using Mat = Eigen::Map<RowMatrix>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;

Buffer affine_relu(const Param& w, const std::optional<Param>& b, std::span<const double> x) {
    ConstMat m(w.value.data(), w.shape[0], w.shape[1]);
    Eigen::VectorXd y = m * ConstVec(x.data(), static_cast<Eigen::Index>(x.size()));
    if (b) {
        y += ConstVec(b->value.data(), w.shape[0]);
    }
    Buffer out(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        out[static_cast<std::size_t>(i)] = y[i] > 0.0 ? y[i] : 0.0;
    }
    return out;
}

// Given dL/d(relu output) and the relu output, accumulates into W (and b) and
// returns dL/dx.
Buffer affine_relu_backward(Buffer d_out, std::span<const double> out, Param& w,
                                         std::optional<Param>& b, std::span<const double> x) {
    for (std::size_t i = 0; i < d_out.size(); ++i) {
        if (!(out[i] > 0.0)) {
            d_out[i] = 0.0;
        }
    }
    const auto rows = w.shape[0];
    const auto cols = w.shape[1];
    ConstVec g(d_out.data(), rows);
    Mat gw(w.grad.data(), rows, cols);
    gw.noalias() += g * ConstVec(x.data(), cols).transpose();
    if (b) {
        Eigen::Map<Eigen::VectorXd>(b->grad.data(), rows) += g;
    }
    ConstMat m(w.value.data(), rows, cols);
    Eigen::VectorXd dx = m.transpose() * g;
    return {dx.data(), dx.data() + dx.size()};
}

}  // namespace

QAAParams make_qaa_params(const QaaConfig& cfg, int channels, std::mt19937_64& rng) {
    require(cfg.embed_dim > 0 && channels > 0, "qaa: embed_dim and channels must be positive");
    QAAParams p;
    p.embed = Param("qaa.embed.weight", {cfg.embed_dim, 2 * channels}, ParamGroup::FullyConnected);
    p.rgb_gate = Param("qaa.rgb_gate.weight", {channels, cfg.embed_dim}, ParamGroup::FullyConnected);
    p.t_gate = Param("qaa.t_gate.weight", {channels, cfg.embed_dim}, ParamGroup::FullyConnected);
    init_he_uniform(p.embed, 2 * channels, rng);
    init_he_uniform(p.rgb_gate, cfg.embed_dim, rng);
    init_he_uniform(p.t_gate, cfg.embed_dim, rng);
    if (cfg.bias) {
        p.embed_bias = Param("qaa.embed.bias", {cfg.embed_dim}, ParamGroup::FullyConnected);
        p.rgb_bias = Param("qaa.rgb_gate.bias", {channels}, ParamGroup::FullyConnected);
        p.t_bias = Param("qaa.t_gate.bias", {channels}, ParamGroup::FullyConnected);
    }
    return p;
}

double AttentionVectors::mean_a() const {
    return a.empty() ? 0.0 : std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
}

double AttentionVectors::mean_b() const {
    return b.empty() ? 0.0 : std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
}

Buffer global_avg_pool(const FeatureMap& x) {
    require(!x.empty(), "global_avg_pool: empty feature map");
    Buffer f(static_cast<std::size_t>(x.channels));
    const double inv = 1.0 / static_cast<double>(x.plane());
    for (int c = 0; c < x.channels; ++c) {
        const auto ch = x.channel(c);
        f[static_cast<std::size_t>(c)] = std::accumulate(ch.begin(), ch.end(), 0.0) * inv;
    }
    return f;
}

Buffer embed(std::span<const double> f, const QAAParams& params) {
    require(static_cast<int>(f.size()) == params.embed.shape[1],
            "qaa embed: descriptor length " + std::to_string(f.size()) + " does not match W columns " +
                std::to_string(params.embed.shape[1]));
    return affine_relu(params.embed, params.embed_bias, f);
}

AttentionVectors attention_from_logits(std::span<const double> v_rgb, std::span<const double> v_t) {
    require(v_rgb.size() == v_t.size(), "attention: logit vectors differ in length");
    AttentionVectors att;
    att.a.resize(v_rgb.size());
    att.b.resize(v_rgb.size());
    for (std::size_t c = 0; c < v_rgb.size(); ++c) {
        const double m = std::max(v_rgb[c], v_t[c]);
        const double er = std::exp(v_rgb[c] - m);
        const double et = std::exp(v_t[c] - m);
        att.a[c] = er / (er + et);
        att.b[c] = et / (er + et);
    }
    return att;
}

AttentionVectors modality_attention(std::span<const double> z, const QAAParams& params) {
    require(static_cast<int>(z.size()) == params.embed_dim(), "qaa attention: z length does not match d");
    const auto v_rgb = affine_relu(params.rgb_gate, params.rgb_bias, z);
    const auto v_t = affine_relu(params.t_gate, params.t_bias, z);
    return attention_from_logits(v_rgb, v_t);
}

FeatureMap fuse(const FeatureMap& x_rgb, const FeatureMap& x_t, const AttentionVectors& att) {
    require(x_rgb.same_shape(x_t), "qaa fuse: modal maps differ in shape (" + x_rgb.shape_string() + " vs " +
                                       x_t.shape_string() + ")");
    require(static_cast<int>(att.a.size()) == x_rgb.channels && att.b.size() == att.a.size(),
            "qaa fuse: attention length does not match channel count");
    FeatureMap out(x_rgb.channels, x_rgb.height, x_rgb.width);
    for (int c = 0; c < x_rgb.channels; ++c) {
        const double a = att.a[static_cast<std::size_t>(c)];
        const double b = att.b[static_cast<std::size_t>(c)];
        const auto r = x_rgb.channel(c);
        const auto t = x_t.channel(c);
        auto o = out.channel(c);
        for (std::size_t p = 0; p < o.size(); ++p) {
            const double lo = std::min(r[p], t[p]);
            const double hi = std::max(r[p], t[p]);
            o[p] = std::clamp(a * r[p] + b * t[p], lo, hi);
        }
    }
    return out;
}

QaaResult qaa_forward(const FeatureMap& x_rgb, const FeatureMap& x_t, const QAAParams& params, QaaCache* cache) {
    require(x_rgb.same_shape(x_t), "qaa_forward: modal maps differ in shape (" + x_rgb.shape_string() + " vs " +
                                       x_t.shape_string() + ")");
    require(x_rgb.channels == params.channels(), "qaa_forward: channel count " + std::to_string(x_rgb.channels) +
                                                     " does not match params " +
                                                     std::to_string(params.channels()));
    // GAP of the channel concatenation [X_rgb, X_t] is the two GAPs back to back.
    Buffer f = global_avg_pool(x_rgb);
    const auto ft = global_avg_pool(x_t);
    f.insert(f.end(), ft.begin(), ft.end());
    auto z = embed(f, params);
    auto v_rgb = affine_relu(params.rgb_gate, params.rgb_bias, z);
    auto v_t = affine_relu(params.t_gate, params.t_bias, z);
    QaaResult result;
    result.attention = attention_from_logits(v_rgb, v_t);
    result.fused = fuse(x_rgb, x_t, result.attention);
    if (cache) {
        cache->x_rgb = x_rgb;
        cache->x_t = x_t;
        cache->f = std::move(f);
        cache->z = std::move(z);
        cache->v_rgb = std::move(v_rgb);
        cache->v_t = std::move(v_t);
        cache->attention = result.attention;
    }
    return result;
}

std::pair<FeatureMap, FeatureMap> qaa_backward(const FeatureMap& d_fused, QAAParams& params, const QaaCache& cache) {
    const auto& xr = cache.x_rgb;
    const auto& xt = cache.x_t;
    const auto& att = cache.attention;
    const int C = xr.channels;
    FeatureMap d_rgb(C, xr.height, xr.width);
    FeatureMap d_t(C, xr.height, xr.width);
    Buffer d_vr(static_cast<std::size_t>(C));
    Buffer d_vt(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        const double a = att.a[ci];
        const double b = att.b[ci];
        const auto g = d_fused.channel(c);
        const auto r = xr.channel(c);
        const auto t = xt.channel(c);
        auto gr = d_rgb.channel(c);
        auto gt = d_t.channel(c);
        double da = 0.0;
        double db = 0.0;
        for (std::size_t p = 0; p < g.size(); ++p) {
            gr[p] = a * g[p];
            gt[p] = b * g[p];
            da += g[p] * r[p];
            db += g[p] * t[p];
        }
        // a = softmax_0(v_rgb, v_t): da/dv_rgb = ab, db/dv_rgb = -ab.
        const double ab = a * b;
        d_vr[ci] = ab * (da - db);
        d_vt[ci] = -ab * (da - db);
    }
    auto dz_r = affine_relu_backward(std::move(d_vr), cache.v_rgb, params.rgb_gate, params.rgb_bias, cache.z);
    auto dz_t = affine_relu_backward(std::move(d_vt), cache.v_t, params.t_gate, params.t_bias, cache.z);
    for (std::size_t i = 0; i < dz_r.size(); ++i) {
        dz_r[i] += dz_t[i];
    }
    const auto df = affine_relu_backward(std::move(dz_r), cache.z, params.embed, params.embed_bias, cache.f);
    const double inv = 1.0 / static_cast<double>(xr.plane());
    for (int c = 0; c < C; ++c) {
        const double gr = df[static_cast<std::size_t>(c)] * inv;
        const double gt = df[static_cast<std::size_t>(C + c)] * inv;
        for (auto& v : d_rgb.channel(c)) {
            v += gr;
        }
        for (auto& v : d_t.channel(c)) {
            v += gt;
        }
    }
    return {std::move(d_rgb), std::move(d_t)};
}

}  // namespace fanet
