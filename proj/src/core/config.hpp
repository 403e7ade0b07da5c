#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

#include "core/data.hpp"
#include "core/network.hpp"
#include "core/tracker.hpp"
#include "core/trainer.hpp"

namespace fanet {

/// Everything a run needs. `preset` only selects the network defaults; every
/// other default is the same for both presets.
struct RunConfig {
    std::string preset = "paper-scale";
    std::uint64_t seed = 1;
    NetworkConfig network = NetworkConfig::paper_scale();
    TrainConfig train;
    OnlineConfig online;
    SynthConfig synth;
};

/// "toy" or "paper-scale".
RunConfig default_run_config(const std::string& preset);

/// Reads the preset named in the document (default paper-scale), then
/// overlays every other key. Unknown keys and type mismatches are rejected
/// with the offending path.
RunConfig parse_run_config(std::string_view json_text);
RunConfig run_config_from_json(const nlohmann::json& doc);

/// Overlays `patch` onto an already-resolved config. `preset` may not appear
/// in the patch.
RunConfig patch_run_config(const RunConfig& base, const nlohmann::json& patch);

nlohmann::json run_config_to_json(const RunConfig& cfg);
std::string dump_run_config(const RunConfig& cfg);

nlohmann::json network_to_json(const NetworkConfig& cfg);
NetworkConfig network_from_json(const nlohmann::json& j);

}  // namespace fanet
