#include "owr/rejection.hpp"

#include "owr/error.hpp"

#include <cmath>
#include <ostream>

namespace owr {

void RejectionWeights::validate() const {
  if (!(w_plus > 0.0) || !std::isfinite(w_plus)) fail(ErrorKind::Config, "w_plus must be positive");
  if (!(w_minus > 0.0) || !std::isfinite(w_minus)) fail(ErrorKind::Config, "w_minus must be positive");
}

std::ostream& operator<<(std::ostream& os, const Prediction& p) {
  if (p.is_unknown()) return os << "<unknown>";
  return os << p.label();
}

Prediction predict_from_scores(const std::map<ClassId, double>& scores, double theta) {
  if (scores.empty()) fail(ErrorKind::EmptyModel, "no class scores to predict from");
  const ClassId* best = nullptr;
  double best_score = 0.0;
  // Map iteration is ascending by id, so strict '>' keeps the smallest id on ties.
  for (const auto& [id, s] : scores) {
    if (best == nullptr || s > best_score) {
      best = &id;
      best_score = s;
    }
  }
  if (best_score <= theta) return Prediction::unknown();
  return Prediction::known(*best);
}

Prediction predict_deepnno(const PrototypeStore& store, const ThresholdState& ts, const Vector& f) {
  return predict_from_scores(store.scores_all(f), ts.theta);
}

double sample_weight(const ClassId& sample_label, const ClassId& k, double score, double theta,
                     const RejectionWeights& weights) {
  if (sample_label != k) return 0.0;
  return score > theta ? weights.w_plus : weights.w_minus;
}

std::optional<double> batch_class_average(std::span<const double> own_scores, double theta,
                                          const RejectionWeights& weights) {
  if (own_scores.empty()) return std::nullopt;
  double sum_accepted = 0.0, sum_rejected = 0.0;
  std::size_t n_accepted = 0, n_rejected = 0;
  for (double p : own_scores) {
    if (p > theta) {
      sum_accepted += p;
      ++n_accepted;
    } else {
      sum_rejected += p;
      ++n_rejected;
    }
  }
  if (n_rejected == 0) return sum_accepted / static_cast<double>(n_accepted);
  const double mean_rejected = sum_rejected / static_cast<double>(n_rejected);
  if (n_accepted == 0) return mean_rejected;
  const double mean_accepted = sum_accepted / static_cast<double>(n_accepted);
  // Σ w p / Σ w rewritten as a mix of the two branch means: every step is
  // monotone, so the result cannot grow with w- even after rounding.
  const double accepted_mass = weights.w_plus * static_cast<double>(n_accepted);
  const double share = accepted_mass / (accepted_mass + weights.w_minus * static_cast<double>(n_rejected));
  return mean_rejected + (mean_accepted - mean_rejected) * share;
}

bool update_threshold(ThresholdState& ts, std::span<const double> class_averages) {
  if (class_averages.empty()) return false;
  double sum = 0.0;
  for (double v : class_averages) sum += v;
  const double batch_term = sum / static_cast<double>(class_averages.size());
  const auto t = static_cast<double>(ts.step);
  const double next = (t * ts.theta + batch_term) / (t + 1.0);
  if (!std::isfinite(next)) fail(ErrorKind::Numeric, "threshold update produced a non-finite value");
  ts.theta = next;
  ++ts.step;
  return true;
}

}  // namespace owr
