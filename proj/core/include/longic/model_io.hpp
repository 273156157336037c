#pragma once

#include "longic/indirect.hpp"
#include "longic/models.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace longic {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json standardizer_to_json(const Standardizer& s);
Standardizer standardizer_from_json(const nlohmann::json& j);

ClassifierPtr classifier_from_json(const nlohmann::json& j);
RegressorPtr regressor_from_json(const nlohmann::json& j);
IndirectEstimator indirect_from_json(const nlohmann::json& j);

void save_json(const nlohmann::json& j, const std::filesystem::path& file);
nlohmann::json load_json(const std::filesystem::path& file);

}  // namespace longic
