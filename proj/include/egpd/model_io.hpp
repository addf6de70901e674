#pragma once

// JSON persistence of fitted models. Bases are stored with their
// standardization, knots and eigenbasis so a loaded model predicts exactly as
// the fitted one did.

#include <filesystem>

#include <json.hpp>

#include "egpd/model.hpp"

namespace egpd {

inline constexpr const char* kModelSchema = "egpd-model/1";

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const FittedModel& fitted);
// ConfigError on a missing or unknown schema and on malformed content.
FittedModel model_from_json(const nlohmann::json& j);

void save_model(const FittedModel& fitted, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

}  // namespace egpd
