#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "core/buffer.hpp"

namespace fanet {

enum class ParamGroup { Conv, FullyConnected };

/// A named learnable tensor together with its gradient accumulator.
struct Param {
    std::string name;
    std::vector<int> shape;
    Buffer value;
    Buffer grad;
    ParamGroup group = ParamGroup::Conv;

    Param() = default;
    Param(std::string n, std::vector<int> s, ParamGroup g);

    std::size_t size() const { return value.size(); }
    void zero_grad();
};

/// Fan-in scaled uniform init, bound sqrt(6 / fan_in).
void init_he_uniform(Param& p, int fan_in, std::mt19937_64& rng);
void init_uniform(Param& p, double bound, std::mt19937_64& rng);

/// FNV-1a over the raw bytes of every value, in the given order.
std::uint64_t checksum(std::span<const Param* const> params);

}  // namespace fanet
