#pragma once

#include "owr/dataset.hpp"
#include "owr/protocol.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace owr {

struct OracleConfig {
  std::string kind = "ground-truth";  ///< "ground-truth" or "noisy-web"
  double label_noise_rate = 0.0;
  double feature_shift = 0.0;
  std::size_t samples_per_query = 0;  ///< 0: the class's whole pool
};

struct SplitConfig {
  std::size_t num_known_initial = 3;
  std::size_t num_known_total = 6;
  double test_fraction = 0.3;
};

struct BaselineConfig {
  std::size_t metric_epochs = 0;
  double metric_learning_rate = 0.01;
  double eta_tau = 1.0;
  double tau = 0.0;  ///< 0: select by leave-one-class-out validation
  std::size_t tau_grid = 64;
};

/// Every knob of a run. Defaults follow the published hyperparameters where
/// they exist (λ=1, w+=1, w-=3, memory 2000, 40% rehearsal, batch 64, 120/40
/// epochs, momentum 0.9, weight decay 1e-5); the MLP learning rate is 0.1.
struct RunConfig {
  double lambda = 1.0;
  double w_plus = 1.0;
  double w_minus = 3.0;
  std::size_t memory_capacity = 2000;
  double memory_ratio = 0.4;
  std::size_t batch_size = 64;
  std::size_t epochs_initial = 120;
  std::size_t epochs_incremental = 40;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-5;
  double gradient_clip = 0.0;  ///< 0: no clipping
  std::vector<std::size_t> hidden_layers{64, 32};
  std::size_t embedding_dim = 16;
  std::uint64_t seed = 0;
  CountReset count_reset = CountReset::Never;
  LrSchedule lr_schedule = LrSchedule::Constant;
  bool reset_threshold_each_step = false;
  bool recompute_means_from_memory = false;
  OracleConfig oracle;
  SplitConfig split;
  SyntheticSpec synthetic;
  BaselineConfig baseline;

  void validate() const;

  NetworkArchitecture architecture() const;
  TrainingSchedule initial_schedule() const;
  TrainingSchedule incremental_schedule() const;
};

/// Parses a JSON document whose keys mirror RunConfig fields. Missing keys keep
/// their defaults; unknown keys are a config error.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& config);

/// Independent sub-seed for one consumer of randomness (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace owr
