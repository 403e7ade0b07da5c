#include "core/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/error.hpp"

namespace fanet {

std::string FeatureMap::shape_string() const {
    std::ostringstream os;
    os << channels << 'x' << height << 'x' << width;
    return os.str();
}

FeatureMap concat_channels(std::span<const FeatureMap* const> parts) {
    require(!parts.empty(), "concat_channels: no inputs");
    const int h = parts.front()->height;
    const int w = parts.front()->width;
    int total = 0;
    for (const FeatureMap* p : parts) {
        require(p->height == h && p->width == w,
                "concat_channels: spatial mismatch " + p->shape_string() + " vs " +
                    parts.front()->shape_string());
        total += p->channels;
    }
    FeatureMap out(total, h, w);
    auto it = out.values.begin();
    for (const FeatureMap* p : parts) {
        it = std::copy(p->values.begin(), p->values.end(), it);
    }
    return out;
}

std::vector<FeatureMap> split_channels(const FeatureMap& whole, std::span<const int> channel_counts) {
    std::vector<FeatureMap> out;
    out.reserve(channel_counts.size());
    std::size_t offset = 0;
    for (int c : channel_counts) {
        FeatureMap part(c, whole.height, whole.width);
        require(offset + part.size() <= whole.size(), "split_channels: channel counts exceed input");
        std::copy_n(whole.values.begin() + static_cast<std::ptrdiff_t>(offset), part.size(), part.values.begin());
        offset += part.size();
        out.push_back(std::move(part));
    }
    require(offset == whole.size(), "split_channels: channel counts do not cover input");
    return out;
}

void add_into(FeatureMap& dst, const FeatureMap& src) {
    require(dst.same_shape(src), "add_into: shape mismatch " + dst.shape_string() + " vs " + src.shape_string());
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst.values[i] += src.values[i];
    }
}

int conv_output_size(int input, const ConvGeometry& g) {
    const int span = g.dilation * (g.kernel - 1) + 1;
    const int padded = input + 2 * g.pad;
    if (padded < span) {
        return 0;
    }
    return (padded - span) / g.stride + 1;
}

namespace {

using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

void im2col(const FeatureMap& in, const ConvGeometry& g, int out_h, int out_w, RowMatrix& cols) {
    const int k = g.kernel;
    cols.resize(static_cast<Eigen::Index>(in.channels) * k * k, static_cast<Eigen::Index>(out_h) * out_w);
    for (int c = 0; c < in.channels; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                double* row = cols.row((c * k + ky) * k + kx).data();
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky * g.dilation;
                    double* dst = row + static_cast<std::ptrdiff_t>(oy) * out_w;
                    if (iy < 0 || iy >= in.height) {
                        std::fill(dst, dst + out_w, 0.0);
                        continue;
                    }
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx * g.dilation;
                        dst[ox] = (ix >= 0 && ix < in.width) ? in.at(c, iy, ix) : 0.0;
                    }
                }
            }
        }
    }
}

void col2im(const RowMatrix& cols, const ConvGeometry& g, int out_h, int out_w, FeatureMap& in) {
    const int k = g.kernel;
    for (int c = 0; c < in.channels; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const double* row = cols.row((c * k + ky) * k + kx).data();
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky * g.dilation;
                    if (iy < 0 || iy >= in.height) {
                        continue;
                    }
                    const double* src = row + static_cast<std::ptrdiff_t>(oy) * out_w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx * g.dilation;
                        if (ix >= 0 && ix < in.width) {
                            in.at(c, iy, ix) += src[ox];
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

FeatureMap conv2d_forward(const FeatureMap& input, const Param& weight, const Param& bias,
                          const ConvGeometry& g, ConvCache* cache) {
    require(weight.shape.size() == 4 && weight.shape[2] == g.kernel && weight.shape[3] == g.kernel,
            "conv2d: weight shape does not match kernel size for " + weight.name);
    require(weight.shape[1] == input.channels,
            "conv2d: " + weight.name + " expects " + std::to_string(weight.shape[1]) +
                " input channels, got " + std::to_string(input.channels));
    const int out_c = weight.shape[0];
    const int out_h = conv_output_size(input.height, g);
    const int out_w = conv_output_size(input.width, g);
    require(out_h > 0 && out_w > 0, "conv2d: input " + input.shape_string() + " too small for " + weight.name);

    RowMatrix local;
    RowMatrix& cols = cache ? cache->cols : local;
    im2col(input, g, out_h, out_w, cols);

    FeatureMap out(out_c, out_h, out_w);
    ConstRowMap w(weight.value.data(), out_c, cols.rows());
    RowMap o(out.values.data(), out_c, cols.cols());
    o.noalias() = w * cols;
    for (int c = 0; c < out_c; ++c) {
        o.row(c).array() += bias.value[static_cast<std::size_t>(c)];
    }
    if (cache) {
        cache->in_channels = input.channels;
        cache->in_height = input.height;
        cache->in_width = input.width;
    }
    return out;
}

FeatureMap conv2d_backward(const FeatureMap& d_output, Param& weight, Param& bias,
                           const ConvGeometry& g, const ConvCache& cache) {
    const int out_c = weight.shape[0];
    const auto& cols = cache.cols;
    require(d_output.channels == out_c && static_cast<Eigen::Index>(d_output.plane()) == cols.cols(),
            "conv2d_backward: gradient shape mismatch for " + weight.name);
    ConstRowMap dout(d_output.values.data(), out_c, cols.cols());
    RowMap dw(weight.grad.data(), out_c, cols.rows());
    ConstRowMap w(weight.value.data(), out_c, cols.rows());
    dw.noalias() += dout * cols.transpose();
    for (int c = 0; c < out_c; ++c) {
        bias.grad[static_cast<std::size_t>(c)] += dout.row(c).sum();
    }
    RowMatrix dcols = w.transpose() * dout;
    FeatureMap d_input(cache.in_channels, cache.in_height, cache.in_width);
    col2im(dcols, g, d_output.height, d_output.width, d_input);
    return d_input;
}

void relu_inplace(FeatureMap& x) {
    for (auto& v : x.values) {
        v = v > 0.0 ? v : 0.0;
    }
}

void relu_backward_inplace(FeatureMap& grad, const FeatureMap& output) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!(output.values[i] > 0.0)) {
            grad.values[i] = 0.0;
        }
    }
}

FeatureMap max_pool_forward(const FeatureMap& input, int factor, PoolCache* cache) {
    require(factor >= 1, "max_pool: factor must be >= 1");
    const int oh = input.height / factor;
    const int ow = input.width / factor;
    require(oh > 0 && ow > 0, "max_pool: input " + input.shape_string() + " smaller than pool factor");
    FeatureMap out(input.channels, oh, ow);
    if (cache) {
        cache->in_height = input.height;
        cache->in_width = input.width;
        cache->argmax.assign(out.size(), 0);
    }
    std::size_t o = 0;
    for (int c = 0; c < input.channels; ++c) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x, ++o) {
                int best_y = y * factor;
                int best_x = x * factor;
                double best = input.at(c, best_y, best_x);
                for (int dy = 0; dy < factor; ++dy) {
                    for (int dx = 0; dx < factor; ++dx) {
                        const double v = input.at(c, y * factor + dy, x * factor + dx);
                        if (v > best) {
                            best = v;
                            best_y = y * factor + dy;
                            best_x = x * factor + dx;
                        }
                    }
                }
                out.values[o] = best;
                if (cache) {
                    cache->argmax[o] = best_y * input.width + best_x;
                }
            }
        }
    }
    return out;
}

FeatureMap max_pool_backward(const FeatureMap& d_output, const PoolCache& cache) {
    FeatureMap d_input(d_output.channels, cache.in_height, cache.in_width);
    std::size_t o = 0;
    for (int c = 0; c < d_output.channels; ++c) {
        auto plane = d_input.channel(c);
        for (std::size_t i = 0; i < d_output.plane(); ++i, ++o) {
            plane[static_cast<std::size_t>(cache.argmax[o])] += d_output.values[o];
        }
    }
    return d_input;
}

FeatureMap lrn_forward(const FeatureMap& input, const LrnConfig& cfg, LrnCache* cache) {
    require(cfg.size >= 1 && cfg.k > 0 && cfg.alpha > 0 && cfg.beta > 0, "lrn: constants must be positive");
    const int C = input.channels;
    const std::size_t P = input.plane();
    const int before = cfg.size / 2;
    const int after = (cfg.size - 1) / 2;
    const double coeff = cfg.alpha / cfg.size;
    FeatureMap scale(C, input.height, input.width, cfg.k);
    for (int c = 0; c < C; ++c) {
        auto s = scale.channel(c);
        for (int j = std::max(0, c - before); j <= std::min(C - 1, c + after); ++j) {
            auto x = input.channel(j);
            for (std::size_t p = 0; p < P; ++p) {
                s[p] += coeff * x[p] * x[p];
            }
        }
    }
    FeatureMap out(C, input.height, input.width);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.values[i] = input.values[i] * std::pow(scale.values[i], -cfg.beta);
    }
    if (cache) {
        cache->input = input;
        cache->scale = std::move(scale);
    }
    return out;
}

FeatureMap lrn_backward(const FeatureMap& d_output, const LrnConfig& cfg, const LrnCache& cache) {
    const auto& x = cache.input;
    const auto& s = cache.scale;
    const int C = x.channels;
    const std::size_t P = x.plane();
    const int before = cfg.size / 2;
    const int after = (cfg.size - 1) / 2;
    // t_c = dy_c * x_c * s_c^(-beta-1)
    FeatureMap t(C, x.height, x.width);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t.values[i] = d_output.values[i] * x.values[i] * std::pow(s.values[i], -cfg.beta - 1.0);
    }
    const double coeff = 2.0 * cfg.alpha * cfg.beta / cfg.size;
    FeatureMap dx(C, x.height, x.width);
    for (int j = 0; j < C; ++j) {
        auto out = dx.channel(j);
        auto xj = x.channel(j);
        auto sj = s.channel(j);
        auto dyj = d_output.channel(j);
        for (std::size_t p = 0; p < P; ++p) {
            out[p] = dyj[p] * std::pow(sj[p], -cfg.beta);
        }
        // channels c whose window contains j
        for (int c = std::max(0, j - after); c <= std::min(C - 1, j + before); ++c) {
            auto tc = t.channel(c);
            for (std::size_t p = 0; p < P; ++p) {
                out[p] -= coeff * xj[p] * tc[p];
            }
        }
    }
    return dx;
}

}  // namespace fanet
