#include "core/variant.hpp"

#include "core/error.hpp"
#include "core/network.hpp"

namespace fanet {

const std::vector<VariantSpec>& all_variants() {
    static const std::vector<VariantSpec> specs{
        {Variant::Full, "full",
         "shared backbone per modality -> HFA per modality -> QAA fusion -> RoIAlign -> FC head", true, true},
        {Variant::FA, "fa", "shared backbone per modality -> HFA per modality -> channel concatenation -> head",
         true, false},
        {Variant::MA, "ma", "shared backbone per modality -> QAA on conv3 maps -> head", false, true},
        {Variant::Early, "early", "6-channel RGB+T input -> single backbone -> conv3 -> head", false, false},
        {Variant::Mid, "mid", "shared conv1 per modality -> concatenate -> conv2, conv3 -> head", false, false},
        {Variant::Late, "late", "shared backbone per modality -> concatenate conv3 maps -> head", false, false},
    };
    return specs;
}

const VariantSpec& variant_spec(Variant v) {
    for (const auto& s : all_variants()) {
        if (s.variant == v) {
            return s;
        }
    }
    fail(ErrorKind::InvalidArgument, "unknown variant enum value");
}

Variant parse_variant(std::string_view name) {
    std::string valid;
    for (const auto& s : all_variants()) {
        if (s.name == name) {
            return s.variant;
        }
        valid += (valid.empty() ? "" : ", ") + s.name;
    }
    fail(ErrorKind::InvalidArgument, "unknown variant '" + std::string(name) + "' (valid: " + valid + ")");
}

std::string variant_name(Variant v) { return variant_spec(v).name; }

NetworkConfig build_variant(std::string_view name, const NetworkConfig& base) {
    NetworkConfig cfg = base;
    cfg.variant = parse_variant(name);
    return cfg;
}

}  // namespace fanet
