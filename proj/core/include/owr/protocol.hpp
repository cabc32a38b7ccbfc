#pragma once

#include "owr/embedding.hpp"
#include "owr/evaluation.hpp"
#include "owr/losses.hpp"
#include "owr/memory.hpp"
#include "owr/oracle.hpp"
#include "owr/prototypes.hpp"
#include "owr/rejection.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace owr {

class MetricsWriter;

struct NetworkArchitecture {
  std::vector<std::size_t> hidden{64, 32};
  std::size_t embedding_dim = 16;
};

/// Never: n_k accumulates over the model lifetime (every epoch re-counts each sample).
/// Phase: zeroed when a training phase starts. Epoch: zeroed at every epoch.
enum class CountReset { Never, Phase, Epoch };

std::string to_string(CountReset r);
CountReset count_reset_from_string(const std::string& s);

/// Learning rate over the epochs of one phase. Cosine decays from the base rate
/// towards zero: lr_e = lr * (1 + cos(pi * e / E)) / 2.
enum class LrSchedule { Constant, Cosine };

std::string to_string(LrSchedule s);
LrSchedule lr_schedule_from_string(const std::string& s);

/// Hyperparameters of one training phase (initial or incremental).
struct TrainingSchedule {
  std::size_t epochs = 120;
  BatchSpec batch;
  SgdConfig sgd;
  double lambda = 1.0;
  RejectionWeights weights;
  /// When the per-class counts n_k restart.
  CountReset count_reset = CountReset::Never;
  LrSchedule lr_schedule = LrSchedule::Constant;
  /// Restart (θ, t) at every incremental step instead of keeping a lifetime estimate.
  bool reset_threshold_each_step = false;
  /// After a phase, replace each mean by the mean embedding of its memory exemplars.
  bool recompute_means_from_memory = false;

  void validate() const;
};

/// The complete incremental model.
struct OwrState {
  std::vector<ClassId> known_classes;  ///< K_t, in order of discovery
  EmbeddingNetwork network;
  std::optional<NetworkSnapshot> snapshot;  ///< teacher from the previous step
  PrototypeStore prototypes;
  ThresholdState threshold;
  ExemplarMemory memory;
  std::size_t incremental_step = 0;
  std::size_t oracle_collisions = 0;
  /// Rejected samples awaiting an oracle. Not persisted in checkpoints.
  std::deque<OracleQuery> unknown_queue;

  bool is_known(const ClassId& id) const;
};

OwrState make_state(std::size_t input_dim, const NetworkArchitecture& arch, std::size_t memory_capacity,
                    std::uint64_t seed);

struct PhaseReport {
  std::vector<LossBreakdown> epoch_losses;
  std::size_t batches = 0;
  double theta = 0.0;
};

/// Trains φ_Θ on T_0 with the classification loss only, updating means and θ
/// after every batch, then fills and prunes the exemplar memory.
PhaseReport train_initial(OwrState& state, std::span<const LabeledSample> data,
                          std::span<const ClassId> declared_classes, const TrainingSchedule& schedule,
                          std::uint64_t seed, MetricsWriter* metrics = nullptr);

Prediction predict(const OwrState& state, const Vector& input);

/// Predicts and queues Unknown outcomes for the oracle.
Prediction discover(OwrState& state, const OracleQuery& query);

struct StepReport {
  ClassId label;
  bool collision = false;          ///< oracle returned an already-known label
  std::size_t samples_used = 0;
  std::size_t samples_dropped = 0;  ///< labels outside K_t ∪ {label}
  PhaseReport training;
};

/// One incremental step: query the oracle, snapshot the network, fine-tune on
/// oracle data plus memory with distillation, extend K, re-quota the memory.
/// The caller supplies a trigger the model rejected.
StepReport incremental_step(OwrState& state, LabelOracle& oracle, const OracleQuery& trigger,
                            const TrainingSchedule& schedule, std::uint64_t seed, MetricsWriter* metrics = nullptr);

/// Pops the oldest queued unknown and runs incremental_step on it.
std::optional<StepReport> process_next_unknown(OwrState& state, LabelOracle& oracle,
                                               const TrainingSchedule& schedule, std::uint64_t seed,
                                               MetricsWriter* metrics = nullptr);

EvalReport evaluate(const OwrState& state, std::span<const LabeledSample> test);

}  // namespace owr
