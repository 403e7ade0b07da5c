#include "core/optimizer.hpp"

#include <cmath>

#include "core/error.hpp"

namespace fanet {

void Adam::step(std::span<Param* const> params, std::span<const double> lrs) {
    require(params.size() == lrs.size(), "adam: one learning rate per parameter is required");
    ++steps_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Param& p = *params[i];
        const double lr = lrs[i];
        auto& mom = moments_[p.name];
        if (mom.m.size() != p.size()) {
            mom.m.assign(p.size(), 0.0);
            mom.v.assign(p.size(), 0.0);
        }
        for (std::size_t j = 0; j < p.size(); ++j) {
            double g = p.grad[j];
            if (!cfg_.decoupled_weight_decay) {
                g += cfg_.weight_decay * p.value[j];
            }
            mom.m[j] = cfg_.beta1 * mom.m[j] + (1.0 - cfg_.beta1) * g;
            mom.v[j] = cfg_.beta2 * mom.v[j] + (1.0 - cfg_.beta2) * g * g;
            if (lr == 0.0) {
                continue;
            }
            const double update = (mom.m[j] / c1) / (std::sqrt(mom.v[j] / c2) + cfg_.epsilon);
            if (cfg_.decoupled_weight_decay) {
                p.value[j] -= lr * cfg_.weight_decay * p.value[j];
            }
            p.value[j] -= lr * update;
        }
    }
}

void Adam::restore(std::int64_t steps, std::map<std::string, Moments> moments) {
    steps_ = steps;
    moments_ = std::move(moments);
}

}  // namespace fanet
