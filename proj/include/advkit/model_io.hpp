#pragma once

#include <filesystem>
#include <string>

#include "advkit/json_text.hpp"
#include "advkit/model.hpp"

namespace advkit {

inline constexpr int kModelFormatVersion = 1;

Json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const Json& j);

/// Canonical model file text: {format_version, spec, meta, params}.
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(const std::string& text, const std::string& origin = "model");

void save_model(const TrainedModel& model, const std::filesystem::path& path);

/// Raises DataError on unreadable, truncated, corrupt, or version-mismatched
/// files.
TrainedModel load_model(const std::filesystem::path& path);

/// SHA-256 of the canonical serialization.
std::string model_hash(const TrainedModel& model);

}  // namespace advkit
