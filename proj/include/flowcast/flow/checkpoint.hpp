#pragma once

#include <filesystem>
#include <json.hpp>

#include "flowcast/flow/flow_model.hpp"

namespace flowcast::flow {

inline constexpr int kCheckpointVersion = 1;

/// A checkpoint is a directory holding `manifest.json` (dimensions, block
/// count, variant, net widths, format version, tensor table, free-form
/// metadata) and `params.bin` (every tensor as little-endian float64, in
/// manifest order). Output bytes depend only on the model and metadata.
void save_checkpoint(const FlowModel& model, const std::filesystem::path& dir,
                     const nlohmann::json& metadata = nlohmann::json::object());

struct LoadedCheckpoint {
  FlowModel model;
  nlohmann::json metadata;
};

/// Throws InputError on a missing, malformed, or inconsistent checkpoint.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

nlohmann::json flow_config_to_json(const FlowConfig& config);
FlowConfig flow_config_from_json(const nlohmann::json& j);

}  // namespace flowcast::flow
