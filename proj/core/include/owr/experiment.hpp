#pragma once

#include "owr/checkpoint.hpp"
#include "owr/config.hpp"
#include "owr/dataset.hpp"
#include "owr/oracle.hpp"
#include "owr/protocol.hpp"

#include <memory>
#include <vector>

namespace owr {

class MetricsWriter;

/// Named randomness streams derived from RunConfig::seed.
enum class SeedStream : std::uint64_t {
  NetworkInit = 1,
  InitialTraining = 2,
  Oracle = 3,
  Split = 4,
  Synthetic = 5,
  IncrementalTraining = 100,  ///< + step index
};

std::uint64_t stream_seed(const RunConfig& config, SeedStream stream, std::uint64_t offset = 0);

/// Synthetic clusters seeded from the run seed.
Dataset synthetic_dataset(const RunConfig& config);
OpenWorldSplit make_split(const RunConfig& config, const Dataset& dataset);

/// Oracle over the training pools of the incremental classes.
std::unique_ptr<LabelOracle> make_oracle(const RunConfig& config, const OpenWorldSplit& split);

/// Fresh state trained on the initial classes.
OwrState train_initial_model(const RunConfig& config, const OpenWorldSplit& split, MetricsWriter* metrics = nullptr);

struct StepOutcome {
  ClassId target;                 ///< class scripted for this step
  double rejection_before = 0.0;  ///< fraction of its test samples rejected before the step
  StepReport step;
  EvalReport after;
};

struct OwrRunResult {
  OwrState state;
  EvalReport initial;
  std::vector<StepOutcome> steps;

  const EvalReport& final_report() const { return steps.empty() ? initial : steps.back().after; }
  /// Mean open-world accuracy over the initial evaluation and every step.
  double mean_open_world_accuracy() const;
};

/// Scripted benchmark: one incremental step per incremental class, evaluating
/// on every test sample (not-yet-known classes count as unknown) after each.
OwrRunResult run_owr(const RunConfig& config, const OpenWorldSplit& split, LabelOracle& oracle,
                     MetricsWriter* metrics = nullptr);
/// Same, continuing from an already trained initial state.
OwrRunResult continue_owr(const RunConfig& config, const OpenWorldSplit& split, OwrState state, LabelOracle& oracle,
                          MetricsWriter* metrics = nullptr);

struct BaselineRunResult {
  NnoModel model;
  EvalReport initial;
  std::vector<EvalReport> steps;

  const EvalReport& final_report() const { return steps.empty() ? initial : steps.back(); }
  double mean_open_world_accuracy() const;
};

/// Frozen-representation NNO: features from `frozen`, W and τ fixed after the
/// initial classes, and each step only adds the new class mean.
BaselineRunResult run_nno_baseline(const RunConfig& config, const OpenWorldSplit& split,
                                   const EmbeddingNetwork& frozen, LabelOracle& oracle,
                                   MetricsWriter* metrics = nullptr);

/// Closed-world NCM over the same frozen features; never rejects.
BaselineRunResult run_ncm_baseline(const RunConfig& config, const OpenWorldSplit& split,
                                   const EmbeddingNetwork& frozen, LabelOracle& oracle,
                                   MetricsWriter* metrics = nullptr);

}  // namespace owr
