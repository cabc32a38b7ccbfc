#pragma once

#include "owr/prototypes.hpp"
#include "owr/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>

namespace owr {

/// Rejection threshold θ and the number t of completed updates.
struct ThresholdState {
  double theta = 0.0;
  std::uint64_t step = 0;
};

/// Per-sample weights for accepted (w+) and rejected (w-) ground-truth scores.
struct RejectionWeights {
  double w_plus = 1.0;
  double w_minus = 3.0;

  void validate() const;
};

/// Either a known class or the "unknown" outcome.
class Prediction {
 public:
  static Prediction known(ClassId id) { return Prediction(std::move(id)); }
  static Prediction unknown() { return Prediction(); }

  bool is_unknown() const { return !label_.has_value(); }
  bool is_known() const { return label_.has_value(); }
  /// Precondition: is_known().
  const ClassId& label() const { return *label_; }

  friend bool operator==(const Prediction&, const Prediction&) = default;

 private:
  Prediction() = default;
  explicit Prediction(ClassId id) : label_(std::move(id)) {}

  std::optional<ClassId> label_;
};

std::ostream& operator<<(std::ostream& os, const Prediction& p);

/// Unknown iff every score is <= theta; otherwise the argmax, ties to the smallest id.
Prediction predict_from_scores(const std::map<ClassId, double>& scores, double theta);

Prediction predict_deepnno(const PrototypeStore& store, const ThresholdState& ts, const Vector& f);

/// w+ if the sample belongs to k and is accepted (p > θ), w- if it belongs to k
/// and is rejected (p <= θ), zero otherwise.
double sample_weight(const ClassId& sample_label, const ClassId& k, double score, double theta,
                     const RejectionWeights& weights);

/// Weighted average of the ground-truth scores of one class within a batch.
/// Returns nullopt when the class has no samples in the batch.
std::optional<double> batch_class_average(std::span<const double> own_scores, double theta,
                                          const RejectionWeights& weights);

/// θ <- (t θ + mean(class_averages)) / (t + 1), t <- t + 1.
/// Returns false and leaves the state unchanged when no class is represented.
bool update_threshold(ThresholdState& ts, std::span<const double> class_averages);

}  // namespace owr
