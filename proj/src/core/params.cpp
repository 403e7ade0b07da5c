#include "core/params.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

namespace fanet {

Param::Param(std::string n, std::vector<int> s, ParamGroup g)
    : name(std::move(n)), shape(std::move(s)), group(g) {
    const auto count = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                       [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
    value.assign(count, 0.0);
    grad.assign(count, 0.0);
}

void Param::zero_grad() {
    std::fill(grad.begin(), grad.end(), 0.0);
}

void init_uniform(Param& p, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : p.value) {
        v = dist(rng);
    }
}

void init_he_uniform(Param& p, int fan_in, std::mt19937_64& rng) {
    init_uniform(p, std::sqrt(6.0 / static_cast<double>(fan_in)), rng);
}

std::uint64_t checksum(std::span<const Param* const> params) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const Param* p : params) {
        for (double v : p->value) {
            unsigned char bytes[sizeof(double)];
            std::memcpy(bytes, &v, sizeof(double));
            for (unsigned char b : bytes) {
                h ^= b;
                h *= 1099511628211ULL;
            }
        }
    }
    return h;
}

}  // namespace fanet
