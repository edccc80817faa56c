#pragma once

#include "deltarank/network.hpp"

#include <filesystem>
#include <optional>

#include <json.hpp>

namespace deltarank {

inline constexpr int kCheckpointVersion = 1;

/// Self-describing model snapshot: configuration, weights and (optionally)
/// the Adagrad accumulators.
struct Checkpoint {
    ModelConfig config;
    ModelParameters params;
    std::optional<ModelParameters> adagrad;
};

nlohmann::json config_to_json(const ModelConfig& config);
/// Missing keys keep their defaults.
ModelConfig config_from_json(const nlohmann::json& j, ModelConfig base = {});

/// JSON with every float written to 17 significant digits.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace deltarank
