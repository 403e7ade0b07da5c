#include "core/head.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace fanet {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMat = Eigen::Map<const RowMatrix>;
using Mat = Eigen::Map<RowMatrix>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using Vec = Eigen::Map<Eigen::VectorXd>;

ConstMat weights(const Param& p) { return {p.value.data(), p.shape[0], p.shape[1]}; }
Mat weight_grads(Param& p) { return {p.grad.data(), p.shape[0], p.shape[1]}; }

Eigen::MatrixXd affine(const Param& w, const Param& b, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd y = weights(w) * x;
    y.colwise() += ConstVec(b.value.data(), w.shape[0]);
    return y;
}

Eigen::MatrixXd affine_backward(const Eigen::MatrixXd& dy, const Eigen::MatrixXd& x, Param& w, Param& b) {
    weight_grads(w).noalias() += dy * x.transpose();
    Vec(b.grad.data(), w.shape[0]) += dy.rowwise().sum();
    return weights(w).transpose() * dy;
}

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
    Eigen::MatrixXd m(rows, cols);
    const double keep = 1.0 - rate;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = u(rng) < keep ? 1.0 / keep : 0.0;
        }
    }
    return m;
}

struct Tap {
    int index;
    double weight;
};

// Bilinear taps for every sample of every bin of one box, in bin order.
// Each bin contributes samples^2 * 4 taps whose weights already include the
// 1 / samples^2 averaging factor.
std::vector<Tap> roi_taps(const Box& box, int height, int width, double stride, int roi_size, int samples) {
    if (!(box.w > 0.0 && box.h > 0.0) || !std::isfinite(box.x) || !std::isfinite(box.y)) {
        fail(ErrorKind::InvalidArgument, "roi_align: box with zero or invalid area");
    }
    const double x0 = box.x / stride - 0.5;
    const double y0 = box.y / stride - 0.5;
    const double bin_w = box.w / stride / roi_size;
    const double bin_h = box.h / stride / roi_size;
    const double norm = 1.0 / (samples * samples);
    std::vector<Tap> taps;
    taps.reserve(static_cast<std::size_t>(roi_size * roi_size * samples * samples * 4));
    for (int by = 0; by < roi_size; ++by) {
        for (int bx = 0; bx < roi_size; ++bx) {
            for (int sy = 0; sy < samples; ++sy) {
                for (int sx = 0; sx < samples; ++sx) {
                    double y = y0 + by * bin_h + (sy + 0.5) * bin_h / samples;
                    double x = x0 + bx * bin_w + (sx + 0.5) * bin_w / samples;
                    y = std::clamp(y, 0.0, static_cast<double>(height - 1));
                    x = std::clamp(x, 0.0, static_cast<double>(width - 1));
                    const int iy0 = static_cast<int>(std::floor(y));
                    const int ix0 = static_cast<int>(std::floor(x));
                    const int iy1 = std::min(iy0 + 1, height - 1);
                    const int ix1 = std::min(ix0 + 1, width - 1);
                    const double ly = y - iy0;
                    const double lx = x - ix0;
                    taps.push_back({iy0 * width + ix0, norm * (1 - ly) * (1 - lx)});
                    taps.push_back({iy0 * width + ix1, norm * (1 - ly) * lx});
                    taps.push_back({iy1 * width + ix0, norm * ly * (1 - lx)});
                    taps.push_back({iy1 * width + ix1, norm * ly * lx});
                }
            }
        }
    }
    return taps;
}

}  // namespace

Branch make_branch(int index, int fc2, std::mt19937_64& rng) {
    Branch b;
    const std::string prefix = "head.fc3." + std::to_string(index);
    b.weight = Param(prefix + ".weight", {2, fc2}, ParamGroup::FullyConnected);
    b.bias = Param(prefix + ".bias", {2}, ParamGroup::FullyConnected);
    init_uniform(b.weight, 1.0 / std::sqrt(static_cast<double>(fc2)), rng);
    return b;
}

HeadParams make_head_params(const HeadConfig& cfg, int input_dim, int num_branches, std::mt19937_64& rng) {
    require(num_branches >= 1, "head: at least one branch is required");
    require(cfg.fc1 > 0 && cfg.fc2 > 0 && input_dim > 0, "head: layer widths must be positive");
    require(cfg.dropout1 >= 0 && cfg.dropout1 < 1 && cfg.dropout2 >= 0 && cfg.dropout2 < 1,
            "head: dropout rates must lie in [0, 1)");
    HeadParams p;
    p.fc1_weight = Param("head.fc1.weight", {cfg.fc1, input_dim}, ParamGroup::FullyConnected);
    p.fc1_bias = Param("head.fc1.bias", {cfg.fc1}, ParamGroup::FullyConnected);
    p.fc2_weight = Param("head.fc2.weight", {cfg.fc2, cfg.fc1}, ParamGroup::FullyConnected);
    p.fc2_bias = Param("head.fc2.bias", {cfg.fc2}, ParamGroup::FullyConnected);
    init_he_uniform(p.fc1_weight, input_dim, rng);
    init_he_uniform(p.fc2_weight, cfg.fc1, rng);
    for (int k = 0; k < num_branches; ++k) {
        p.branches.push_back(make_branch(k, cfg.fc2, rng));
    }
    p.dropout1 = cfg.dropout1;
    p.dropout2 = cfg.dropout2;
    return p;
}

HeadParams replace_branches(const HeadParams& params, int k_new, std::mt19937_64& rng) {
    require(k_new >= 1, "replace_branches: k_new must be >= 1");
    HeadParams out = params;
    out.branches.clear();
    for (int k = 0; k < k_new; ++k) {
        out.branches.push_back(make_branch(k, params.fc2_weight.shape[0], rng));
    }
    return out;
}

RoiBatch roi_align(const FeatureMap& features, std::span<const Box> boxes, double stride, int roi_size,
                   int samples) {
    require(stride > 0 && roi_size >= 1 && samples >= 1, "roi_align: invalid stride / size / samples");
    require(!features.empty(), "roi_align: empty feature map");
    const int bins = roi_size * roi_size;
    const int taps_per_bin = samples * samples * 4;
    RoiBatch out(static_cast<Eigen::Index>(features.channels) * bins, static_cast<Eigen::Index>(boxes.size()));
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto taps = roi_taps(boxes[i], features.height, features.width, stride, roi_size, samples);
        double* col = out.col(static_cast<Eigen::Index>(i)).data();
        for (int c = 0; c < features.channels; ++c) {
            const auto plane = features.channel(c);
            for (int bin = 0; bin < bins; ++bin) {
                double acc = 0.0;
                for (int t = bin * taps_per_bin; t < (bin + 1) * taps_per_bin; ++t) {
                    const auto& tap = taps[static_cast<std::size_t>(t)];
                    acc += tap.weight * plane[static_cast<std::size_t>(tap.index)];
                }
                col[c * bins + bin] = acc;
            }
        }
    }
    return out;
}

FeatureMap roi_align_backward(const RoiBatch& d_features, int channels, int height, int width,
                              std::span<const Box> boxes, double stride, int roi_size, int samples) {
    const int bins = roi_size * roi_size;
    const int taps_per_bin = samples * samples * 4;
    require(d_features.rows() == static_cast<Eigen::Index>(channels) * bins &&
                d_features.cols() == static_cast<Eigen::Index>(boxes.size()),
            "roi_align_backward: gradient shape mismatch");
    FeatureMap grad(channels, height, width);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto taps = roi_taps(boxes[i], height, width, stride, roi_size, samples);
        const double* col = d_features.col(static_cast<Eigen::Index>(i)).data();
        for (int c = 0; c < channels; ++c) {
            auto plane = grad.channel(c);
            for (int bin = 0; bin < bins; ++bin) {
                const double g = col[c * bins + bin];
                if (g == 0.0) {
                    continue;
                }
                for (int t = bin * taps_per_bin; t < (bin + 1) * taps_per_bin; ++t) {
                    const auto& tap = taps[static_cast<std::size_t>(t)];
                    plane[static_cast<std::size_t>(tap.index)] += tap.weight * g;
                }
            }
        }
    }
    return grad;
}

Eigen::MatrixXd trunk_forward(const RoiBatch& x, const HeadParams& params, bool train_mode, std::mt19937_64* rng,
                              TrunkCache* cache) {
    require(x.rows() == params.input_dim(), "head: feature length " + std::to_string(x.rows()) +
                                                " does not match fc1 input " + std::to_string(params.input_dim()));
    require(!train_mode || rng != nullptr, "head: train mode needs a random source for dropout");
    Eigen::MatrixXd h1 = affine(params.fc1_weight, params.fc1_bias, x).cwiseMax(0.0);
    Eigen::MatrixXd mask1;
    Eigen::MatrixXd a1 = h1;
    if (train_mode && params.dropout1 > 0.0) {
        mask1 = dropout_mask(h1.rows(), h1.cols(), params.dropout1, *rng);
        a1 = h1.cwiseProduct(mask1);
    }
    Eigen::MatrixXd h2 = affine(params.fc2_weight, params.fc2_bias, a1).cwiseMax(0.0);
    Eigen::MatrixXd mask2;
    Eigen::MatrixXd a2 = h2;
    if (train_mode && params.dropout2 > 0.0) {
        mask2 = dropout_mask(h2.rows(), h2.cols(), params.dropout2, *rng);
        a2 = h2.cwiseProduct(mask2);
    }
    if (cache) {
        cache->input = x;
        cache->h1 = std::move(h1);
        cache->mask1 = std::move(mask1);
        cache->h2 = std::move(h2);
        cache->mask2 = std::move(mask2);
        cache->out = a2;
    }
    return a2;
}

RoiBatch trunk_backward(const Eigen::MatrixXd& d_out, HeadParams& params, const TrunkCache& cache) {
    Eigen::MatrixXd g2 = d_out;
    if (cache.mask2.size() > 0) {
        g2 = g2.cwiseProduct(cache.mask2);
    }
    g2 = (cache.h2.array() > 0.0).select(g2, 0.0);
    const Eigen::MatrixXd a1 = cache.mask1.size() > 0 ? cache.h1.cwiseProduct(cache.mask1) : cache.h1;
    Eigen::MatrixXd g1 = affine_backward(g2, a1, params.fc2_weight, params.fc2_bias);
    if (cache.mask1.size() > 0) {
        g1 = g1.cwiseProduct(cache.mask1);
    }
    g1 = (cache.h1.array() > 0.0).select(g1, 0.0);
    return affine_backward(g1, cache.input, params.fc1_weight, params.fc1_bias);
}

Eigen::MatrixXd branch_forward(const Eigen::MatrixXd& trunk_out, const Branch& branch) {
    return affine(branch.weight, branch.bias, trunk_out);
}

Eigen::MatrixXd branch_backward(const Eigen::MatrixXd& d_logits, const Eigen::MatrixXd& trunk_out, Branch& branch) {
    return affine_backward(d_logits, trunk_out, branch.weight, branch.bias);
}

Eigen::MatrixXd fc_forward(const RoiBatch& x, const HeadParams& params, int domain, bool train_mode,
                           std::mt19937_64* rng) {
    require(domain >= 0 && domain < params.num_branches(),
            "head: domain index " + std::to_string(domain) + " out of range [0, " +
                std::to_string(params.num_branches()) + ")");
    return branch_forward(trunk_forward(x, params, train_mode, rng), params.branches[static_cast<std::size_t>(domain)]);
}

}  // namespace fanet
