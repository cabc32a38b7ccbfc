#pragma once

#include "owr/baselines.hpp"
#include "owr/protocol.hpp"

#include <filesystem>
#include <string>

namespace owr {

inline constexpr int kCheckpointVersion = 1;

/// Architecture descriptor plus row-major parameter arrays.
std::string network_to_json(const EmbeddingNetwork& net);
EmbeddingNetwork network_from_json(const std::string& text);

/// Network, snapshot, prototypes, (θ, t), memory and K_t. Doubles are written
/// in shortest round-trip form, so a reloaded state predicts bit-identically.
std::string checkpoint_to_json(const OwrState& state);
OwrState checkpoint_from_json(const std::string& text);

void save_checkpoint(const OwrState& state, const std::filesystem::path& path);
OwrState load_checkpoint(const std::filesystem::path& path);

/// Frozen-representation NNO model: feature extractor, W, τ, η_τ and class means.
struct NnoModel {
  EmbeddingNetwork network;
  LinearMetric metric;
  NnoParams params;
  PrototypeStore prototypes;
};

void save_nno_model(const NnoModel& model, const std::filesystem::path& path);
NnoModel load_nno_model(const std::filesystem::path& path);

}  // namespace owr
