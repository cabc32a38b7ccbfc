#pragma once

#include "owr/prototypes.hpp"
#include "owr/rejection.hpp"
#include "owr/types.hpp"

#include <span>
#include <vector>

namespace owr {

/// Projection W (m x d) applied to features before measuring distances.
struct LinearMetric {
  Matrix w;

  /// Identity-padded m x d projection: the untrained metric reproduces plain NCM.
  static LinearMetric identity(std::size_t feature_dim, std::size_t metric_dim);

  std::size_t feature_dim() const { return static_cast<std::size_t>(w.rows()); }
  std::size_t metric_dim() const { return static_cast<std::size_t>(w.cols()); }
};

/// NNO score parameters. eta_tau only rescales scores; predictions ignore its value.
struct NnoParams {
  double tau = 1.0;
  double eta_tau = 1.0;

  void validate() const;
};

/// ||Wᵀ f - Wᵀ μ||
double metric_distance(const LinearMetric& metric, const Vector& f, const Vector& mu);

/// Closed-world nearest class mean under the metric; ties to the smallest id.
ClassId ncm_predict(const LinearMetric& metric, const PrototypeStore& store, const Vector& f);

struct MetricLossResult {
  double loss = 0.0;
  Matrix gradient;  ///< same shape as W
};

/// L = -(1/M) Σ log p_{k_i}(x_i) with p_k = exp(-d^W_k / 2).
/// The norm derivative uses sqrt(||z||² + 1e-12) so samples sitting on their
/// projected mean contribute a zero gradient instead of NaN.
MetricLossResult ncm_loss_and_grad(const LinearMetric& metric, std::span<const LabeledFeature> data,
                                   const PrototypeStore& store);

/// η_τ (1 - d/τ); may be negative.
double nno_score(const NnoParams& params, double metric_dist);

/// Unknown iff max(0, s_k) = 0 for every known class, else argmax of the clamped scores.
Prediction nno_predict(const NnoParams& params, const LinearMetric& metric, const PrototypeStore& store,
                       const Vector& f);

struct MetricTrainingConfig {
  std::size_t epochs = 0;
  double learning_rate = 0.01;
};

/// Full-batch gradient descent on ncm_loss_and_grad. After every step W is
/// rescaled back to its initial Frobenius norm: the loss alone is minimised by
/// shrinking W to zero, which would collapse every distance.
void train_metric(LinearMetric& metric, std::span<const LabeledFeature> data, const PrototypeStore& store,
                  const MetricTrainingConfig& config);

/// Candidate τ values spanning the range of own-class metric distances.
std::vector<double> default_tau_grid(const LinearMetric& metric, std::span<const LabeledFeature> validation,
                                     const PrototypeStore& store, std::size_t count = 64);

/// Leave-one-class-out selection of τ: for each known class c, c's mean is
/// withheld and its validation samples must be rejected while the others must
/// be classified correctly. Returns the candidate with the best mean accuracy
/// across folds (smallest τ on ties).
double select_tau(const LinearMetric& metric, std::span<const LabeledFeature> validation,
                  const PrototypeStore& store, std::span<const double> candidates);

}  // namespace owr
