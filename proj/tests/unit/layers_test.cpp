#include "doctest.h"

#include <cmath>
#include <random>

#include "core/layers.hpp"
#include "gradcheck.hpp"

using namespace fanet;
using namespace fanet::testing;

namespace {

FeatureMap naive_conv(const FeatureMap& in, const Param& w, const Param& b, const ConvGeometry& g) {
    const int out_c = w.shape[0];
    const int in_c = w.shape[1];
    const int k = w.shape[2];
    const int oh = conv_output_size(in.height, g);
    const int ow = conv_output_size(in.width, g);
    FeatureMap out(out_c, oh, ow);
    for (int o = 0; o < out_c; ++o) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                double acc = b.value[static_cast<std::size_t>(o)];
                for (int c = 0; c < in_c; ++c) {
                    for (int ky = 0; ky < k; ++ky) {
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = y * g.stride - g.pad + ky * g.dilation;
                            const int ix = x * g.stride - g.pad + kx * g.dilation;
                            if (iy < 0 || ix < 0 || iy >= in.height || ix >= in.width) continue;
                            acc += w.value[static_cast<std::size_t>(((o * in_c + c) * k + ky) * k + kx)] *
                                   in.at(c, iy, ix);
                        }
                    }
                }
                out.at(o, y, x) = acc;
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("conv2d matches a direct loop for strides, padding and dilation") {
    std::mt19937_64 rng(1);
    for (const ConvGeometry g : {ConvGeometry{3, 1, 1, 1}, ConvGeometry{5, 2, 2, 1}, ConvGeometry{3, 1, 3, 3},
                                 ConvGeometry{7, 2, 0, 1}, ConvGeometry{1, 1, 0, 1}}) {
        Param w("w", {4, 3, g.kernel, g.kernel}, ParamGroup::Conv);
        Param b("b", {4}, ParamGroup::Conv);
        fill_uniform(w.value, -1, 1, rng);
        fill_uniform(b.value, -1, 1, rng);
        const auto in = random_map(3, 13, 11, -1, 1, rng);
        const auto fast = conv2d_forward(in, w, b, g, nullptr);
        const auto slow = naive_conv(in, w, b, g);
        REQUIRE(fast.same_shape(slow));
        for (std::size_t i = 0; i < fast.size(); ++i) {
            CHECK(fast.values[i] == doctest::Approx(slow.values[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("conv2d gradients match central differences") {
    std::mt19937_64 rng(2);
    const ConvGeometry g{3, 2, 3, 3};
    Param w("w", {3, 2, 3, 3}, ParamGroup::Conv);
    Param b("b", {3}, ParamGroup::Conv);
    fill_uniform(w.value, -1, 1, rng);
    fill_uniform(b.value, -1, 1, rng);
    auto in = random_map(2, 9, 8, -1, 1, rng);
    ConvCache cache;
    const auto out = conv2d_forward(in, w, b, g, &cache);
    const auto r = random_map(out.channels, out.height, out.width, -1, 1, rng);
    w.zero_grad();
    b.zero_grad();
    const auto d_in = conv2d_backward(r, w, b, g, cache);
    auto loss = [&] { return dot(conv2d_forward(in, w, b, g, nullptr), r); };
    GradReport rep;
    check_entries(w.value, w.grad, loss, "w", 1000, rng, rep);
    check_entries(b.value, b.grad, loss, "b", 1000, rng, rep);
    check_entries(in.values, d_in.values, loss, "input", 1000, rng, rep);
    INFO(rep.worst);
    CHECK(rep.max_rel_error < 1e-6);
}

TEST_CASE("max pool forward, ties and backward") {
    FeatureMap m(1, 4, 4);
    for (int i = 0; i < 16; ++i) m.values[static_cast<std::size_t>(i)] = i + 1;
    PoolCache cache;
    const auto p = max_pool_forward(m, 2, &cache);
    REQUIRE(p.height == 2);
    CHECK(p.values == Buffer{6, 8, 14, 16});
    FeatureMap d(1, 2, 2, 1.0);
    const auto back = max_pool_backward(d, cache);
    CHECK(back.at(0, 1, 1) == 1.0);
    CHECK(back.at(0, 0, 0) == 0.0);
    CHECK(back.at(0, 3, 3) == 1.0);

    FeatureMap flat(2, 6, 6, 0.25);
    const auto q = max_pool_forward(flat, 3, nullptr);
    for (double v : q.values) CHECK(v == 0.25);

    FeatureMap odd(1, 5, 5, 1.0);
    CHECK(max_pool_forward(odd, 2, nullptr).height == 2);
}

TEST_CASE("relu backward masks non-positive outputs") {
    FeatureMap x(1, 1, 4);
    x.values = {-1.0, 0.0, 2.0, 3.0};
    relu_inplace(x);
    CHECK(x.values == Buffer{0.0, 0.0, 2.0, 3.0});
    FeatureMap g(1, 1, 4, 1.0);
    relu_backward_inplace(g, x);
    CHECK(g.values == Buffer{0.0, 0.0, 1.0, 1.0});
}

TEST_CASE("lrn matches a direct evaluation and its gradient") {
    std::mt19937_64 rng(3);
    LrnConfig cfg;
    cfg.alpha = 0.6;
    cfg.k = 1.5;
    auto in = random_map(7, 3, 4, -2, 2, rng);
    LrnCache cache;
    const auto out = lrn_forward(in, cfg, &cache);
    for (int c = 0; c < 7; ++c) {
        for (int y = 0; y < 3; ++y) {
            for (int x = 0; x < 4; ++x) {
                double s = 0;
                for (int j = c - 2; j <= c + 2; ++j) {
                    if (j >= 0 && j < 7) s += in.at(j, y, x) * in.at(j, y, x);
                }
                const double expect = in.at(c, y, x) / std::pow(cfg.k + cfg.alpha / cfg.size * s, cfg.beta);
                CHECK(out.at(c, y, x) == doctest::Approx(expect).epsilon(1e-12));
            }
        }
    }
    const auto r = random_map(7, 3, 4, -1, 1, rng);
    const auto d_in = lrn_backward(r, cfg, cache);
    GradReport rep;
    check_entries(in.values, d_in.values, [&] { return dot(lrn_forward(in, cfg, nullptr), r); }, "x", 1000, rng, rep);
    INFO(rep.worst);
    CHECK(rep.max_rel_error < 1e-6);
}

TEST_CASE("lrn never enlarges magnitudes when k >= 1") {
    std::mt19937_64 rng(4);
    const auto in = random_map(12, 5, 5, -10, 10, rng);
    const auto out = lrn_forward(in, LrnConfig{}, nullptr);
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(std::abs(out.values[i]) <= std::abs(in.values[i]));
    const FeatureMap zero(4, 2, 2);
    for (double v : lrn_forward(zero, LrnConfig{}, nullptr).values) CHECK(v == 0.0);
}

TEST_CASE("channel concatenation and split are inverse") {
    std::mt19937_64 rng(5);
    const auto a = random_map(2, 3, 3, 0, 1, rng);
    const auto b = random_map(3, 3, 3, 0, 1, rng);
    const std::array<const FeatureMap*, 2> parts{&a, &b};
    const auto whole = concat_channels(parts);
    CHECK(whole.channels == 5);
    const std::array<int, 2> counts{2, 3};
    const auto split = split_channels(whole, counts);
    CHECK(split[0].values == a.values);
    CHECK(split[1].values == b.values);
}
