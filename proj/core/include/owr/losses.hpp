#pragma once

#include "owr/embedding.hpp"
#include "owr/prototypes.hpp"
#include "owr/types.hpp"

#include <map>
#include <span>

namespace owr {

/// Bound applied to scores inside the classification loss only.
inline constexpr double kScoreClamp = 1e-7;
/// Floor on norms in direction (unit-vector) computations.
inline constexpr double kNormFloor = 1e-12;

struct LossBreakdown {
  double classification = 0.0;
  double distillation = 0.0;
  double total = 0.0;
  double lambda = 0.0;
};

struct ClassificationLoss {
  double loss = 0.0;
  std::map<ClassId, double> score_gradient;  ///< ∂loss/∂p_k for every scored class
};

/// Binary cross-entropy over class scores, minimised by a correct prediction:
///   loss = -log p_truth - Σ_{k != truth} log(1 - p_k)
/// Scores are clamped to [1e-7, 1 - 1e-7] before the logs; the gradient is zero
/// for a score held at a clamp bound. If truth has no score (its prototype does
/// not exist yet), only the negative terms are accumulated.
ClassificationLoss classification_loss(const std::map<ClassId, double>& scores, const ClassId& truth);

/// Chains ∂loss/∂p_k through p_k = exp(-||f - μ_k|| / 2) back to the feature f.
Vector score_gradient_to_feature(const PrototypeStore& store, const Vector& f,
                                 const std::map<ClassId, double>& scores,
                                 const std::map<ClassId, double>& score_gradient);

struct DistillationLoss {
  double loss = 0.0;
  Vector gradient;  ///< w.r.t. the current feature
};

/// ||current - previous|| and its gradient (current - previous) / max(norm, 1e-12).
DistillationLoss distillation_loss(const Vector& current, const Vector& previous);
DistillationLoss distillation_loss(const EmbeddingNetwork& net, const NetworkSnapshot& snap, const Vector& x);

struct BatchObjective {
  LossBreakdown breakdown;
  ParameterGradients gradients;
};

/// Batch mean of ℓ^cl + λ ℓ^distill and its gradient w.r.t. every network
/// parameter. Means are treated as constants. Pass snap == nullptr outside the
/// incremental phase to drop the distillation term.
BatchObjective total_loss(std::span<const LabeledSample> batch, const EmbeddingNetwork& net,
                          const NetworkSnapshot* snap, const PrototypeStore& store, double lambda);

}  // namespace owr
