#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "core/params.hpp"
#include "core/tensor.hpp"

namespace fanet::testing {

inline double relative_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / scale;
}

struct GradReport {
    double max_rel_error = 0.0;
    int checked = 0;
    int kinks = 0;  ///< entries whose step straddled a ReLU/max-pool switch
    std::string worst;

    void record(const std::string& what, std::size_t index, double analytic, double numeric) {
        ++checked;
        const double e = relative_error(analytic, numeric);
        if (e > max_rel_error) {
            max_rel_error = e;
            worst = what + "[" + std::to_string(index) + "] analytic=" + std::to_string(analytic) +
                    " numeric=" + std::to_string(numeric);
        }
    }
    void merge(const GradReport& o) {
        checked += o.checked;
        kinks += o.kinks;
        if (o.max_rel_error > max_rel_error) {
            max_rel_error = o.max_rel_error;
            worst = o.worst;
        }
    }
};

/// Up to `count` distinct indices of [0, n), all of them when n <= count.
inline std::vector<std::size_t> pick_indices(std::size_t n, std::size_t count, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (n > count) {
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(count);
    }
    return idx;
}

/// Central differences of `loss` with respect to selected entries of `values`
/// compared against `analytic` (same length as values).
///
/// Piecewise-linear layers make the loss non-smooth. When the forward and
/// backward one-sided differences disagree, a kink lies inside the step and
/// the central difference averages two slopes; the analytic value must then
/// match a second-order one-sided difference taken on the kink-free side.
inline void check_entries(Buffer& values, const Buffer& analytic,
                          const std::function<double()>& loss, const std::string& what, std::size_t count,
                          std::mt19937_64& rng, GradReport& report, double step = 1e-5) {
    const auto indices = pick_indices(values.size(), count, rng);
    if (indices.empty()) return;
    const double base = loss();
    for (std::size_t i : indices) {
        const double saved = values[i];
        values[i] = saved + step;
        const double up = loss();
        values[i] = saved - step;
        const double down = loss();
        values[i] = saved;
        const double forward = (up - base) / step;
        const double backward = (base - down) / step;
        if (relative_error(forward, backward) > 1e-3) {
            ++report.kinks;
            // Second-order one-sided stencil on points 0, h/2, h of each side.
            values[i] = saved + 0.5 * step;
            const double half_up = loss();
            values[i] = saved - 0.5 * step;
            const double half_down = loss();
            values[i] = saved;
            const double right = (-3.0 * base + 4.0 * half_up - up) / step;
            const double left = (3.0 * base - 4.0 * half_down + down) / step;
            const double pick =
                relative_error(analytic[i], right) < relative_error(analytic[i], left) ? right : left;
            report.record(what + "(kink)", i, analytic[i], pick);
        } else {
            report.record(what, i, analytic[i], (up - down) / (2.0 * step));
        }
    }
}

inline void fill_uniform(Buffer& v, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(lo, hi);
    for (double& x : v) x = d(rng);
}

inline FeatureMap random_map(int c, int h, int w, double lo, double hi, std::mt19937_64& rng) {
    FeatureMap m(c, h, w);
    fill_uniform(m.values, lo, hi, rng);
    return m;
}

inline double dot(const FeatureMap& a, const FeatureMap& b) {
    return std::inner_product(a.values.begin(), a.values.end(), b.values.begin(), 0.0);
}

}  // namespace fanet::testing
