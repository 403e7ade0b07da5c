#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "core/buffer.hpp"

#include "core/params.hpp"

namespace fanet {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 5e-4;
    bool decoupled_weight_decay = true;
};

/// Adam with per-parameter learning rates. Moments are keyed by parameter
/// name, so a parameter set can be swapped (e.g. new fc3 branches) without
/// touching the others.
class Adam {
public:
    struct Moments {
        Buffer m;
        Buffer v;
    };

    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    /// One update of every parameter in `params` with lrs[i]; gradients are
    /// consumed as-is (callers zero them).
    void step(std::span<Param* const> params, std::span<const double> lrs);

    std::int64_t steps() const { return steps_; }
    const AdamConfig& config() const { return cfg_; }
    const std::map<std::string, Moments>& moments() const { return moments_; }
    void restore(std::int64_t steps, std::map<std::string, Moments> moments);

private:
    AdamConfig cfg_;
    std::int64_t steps_ = 0;
    std::map<std::string, Moments> moments_;
};

}  // namespace fanet
