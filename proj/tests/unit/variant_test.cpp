#include "doctest.h"

#include <random>

#include "core/error.hpp"
#include "core/network.hpp"
#include "gradcheck.hpp"

using namespace fanet;
using namespace fanet::testing;

TEST_CASE("every name maps to one wiring") {
    const auto& all = all_variants();
    CHECK(all.size() == 6);
    for (const auto& s : all) {
        CHECK(parse_variant(s.name) == s.variant);
        CHECK(variant_name(s.variant) == s.name);
        CHECK(!s.wiring.empty());
    }
}

TEST_CASE("unknown names list the valid set") {
    try {
        parse_variant("fusion");
        FAIL("expected an error");
    } catch (const Error& e) {
        const std::string msg = e.what();
        for (const char* n : {"full", "fa", "ma", "early", "mid", "late"}) CHECK(msg.find(n) != std::string::npos);
    }
}

TEST_CASE("full reproduces the default pipeline") {
    const auto base = NetworkConfig::toy();
    const auto a = make_model(base, 2, 4);
    const auto b = make_model(build_variant("full", base), 2, 4);
    CHECK(a.checksum() == b.checksum());
    std::mt19937_64 rng(1);
    FramePair f{random_map(3, 20, 20, 0, 1, rng), random_map(3, 20, 20, 0, 1, rng)};
    CHECK(forward_features(a, f).fused.values == forward_features(b, f).fused.values);
}

TEST_CASE("structural properties of the wirings") {
    const auto base = NetworkConfig::toy();
    std::mt19937_64 rng(2);
    FramePair f{random_map(3, 20, 20, 0, 1, rng), random_map(3, 20, 20, 0, 1, rng)};
    for (const auto& s : all_variants()) {
        const auto m = make_model(build_variant(s.name, base), 1, 3);
        const auto r = forward_features(m, f);
        INFO(s.name);
        CHECK(r.attention.has_value() == s.has_qaa);
        CHECK(m.hfa_rgb.has_value() == s.has_hfa);
        CHECK(m.qaa.has_value() == s.has_qaa);
        CHECK(r.fused.channels == m.config.fused_channels());
        CHECK(m.head.input_dim() == m.config.roi_feature_dim());
        const int in = m.backbone.weight[0].shape[1];
        CHECK(in == (s.variant == Variant::Early ? 6 : 3));
    }
}

TEST_CASE("parameter counts at equal fused width") {
    auto base = NetworkConfig::toy();
    base.backbone.layers[2].out_channels = 48;
    REQUIRE(build_variant("late", base).fused_channels() == build_variant("full", base).fused_channels());
    const auto early = make_model(build_variant("early", base), 1, 1).parameter_count();
    const auto late = make_model(build_variant("late", base), 1, 1).parameter_count();
    const auto full = make_model(build_variant("full", base), 1, 1).parameter_count();
    CHECK(early < late);
    CHECK(late < full);
}
