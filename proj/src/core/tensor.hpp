#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core/buffer.hpp"

namespace fanet {

/// Dense C x H x W array of doubles, channel-major.
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    Buffer values;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w),
          values(static_cast<std::size_t>(c) * h * w, fill) {}

    std::size_t size() const { return values.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    bool empty() const { return values.empty(); }

    double& at(int c, int y, int x) {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    std::span<double> channel(int c) {
        return {values.data() + static_cast<std::size_t>(c) * plane(), plane()};
    }
    std::span<const double> channel(int c) const {
        return {values.data() + static_cast<std::size_t>(c) * plane(), plane()};
    }

    bool same_shape(const FeatureMap& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    std::string shape_string() const;
};

/// Concatenate maps of equal spatial size along the channel axis.
FeatureMap concat_channels(std::span<const FeatureMap* const> parts);
/// Inverse of concat_channels for gradients: splits `whole` into pieces with
/// the given channel counts.
std::vector<FeatureMap> split_channels(const FeatureMap& whole, std::span<const int> channel_counts);

void add_into(FeatureMap& dst, const FeatureMap& src);

}  // namespace fanet
