#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fanet {

enum class Variant { Full, FA, MA, Early, Mid, Late };

struct VariantSpec {
    Variant variant;
    std::string name;
    std::string wiring;
    bool has_hfa;
    bool has_qaa;
};

const std::vector<VariantSpec>& all_variants();
const VariantSpec& variant_spec(Variant v);
/// Throws with the list of valid names on an unknown name.
Variant parse_variant(std::string_view name);
std::string variant_name(Variant v);

struct NetworkConfig;
/// Copy of `base` wired as the named variant.
NetworkConfig build_variant(std::string_view name, const NetworkConfig& base);

}  // namespace fanet
