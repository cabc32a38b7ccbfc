#include "owr/losses.hpp"

#include "owr/error.hpp"

#include <algorithm>
#include <cmath>

namespace owr {

ClassificationLoss classification_loss(const std::map<ClassId, double>& scores, const ClassId& truth) {
  ClassificationLoss out;
  for (const auto& [id, raw] : scores) {
    const double p = std::clamp(raw, kScoreClamp, 1.0 - kScoreClamp);
    const bool clamped = p != raw;
    if (id == truth) {
      out.loss -= std::log(p);
      out.score_gradient.emplace(id, clamped ? 0.0 : -1.0 / p);
    } else {
      out.loss -= std::log1p(-p);
      out.score_gradient.emplace(id, clamped ? 0.0 : 1.0 / (1.0 - p));
    }
  }
  return out;
}

Vector score_gradient_to_feature(const PrototypeStore& store, const Vector& f,
                                 const std::map<ClassId, double>& scores,
                                 const std::map<ClassId, double>& score_gradient) {
  Vector g = Vector::Zero(f.size());
  for (const auto& [id, dl_dp] : score_gradient) {
    if (dl_dp == 0.0) continue;
    const Vector diff = f - store.at(id).mean;
    const double d = std::max(diff.norm(), kNormFloor);
    // ∂p/∂f = -p/2 * (f - μ)/||f - μ||
    g += dl_dp * (-0.5 * scores.at(id) / d) * diff;
  }
  return g;
}

DistillationLoss distillation_loss(const Vector& current, const Vector& previous) {
  if (current.size() != previous.size()) fail(ErrorKind::Shape, "distillation feature lengths differ");
  const Vector diff = current - previous;
  const double n = diff.norm();
  return DistillationLoss{n, diff / std::max(n, kNormFloor)};
}

DistillationLoss distillation_loss(const EmbeddingNetwork& net, const NetworkSnapshot& snap, const Vector& x) {
  if (!net.same_architecture(snap.network())) {
    fail(ErrorKind::Shape, "snapshot architecture differs from the network");
  }
  return distillation_loss(net.forward(x), snap.forward(x));
}

BatchObjective total_loss(std::span<const LabeledSample> batch, const EmbeddingNetwork& net,
                          const NetworkSnapshot* snap, const PrototypeStore& store, double lambda) {
  if (batch.empty()) fail(ErrorKind::Data, "empty training batch");
  if (snap != nullptr && !net.same_architecture(snap->network())) {
    fail(ErrorKind::Shape, "snapshot architecture differs from the network");
  }

  BatchObjective out;
  out.gradients = net.zero_gradients();
  out.breakdown.lambda = lambda;

  for (const auto& sample : batch) {
    const auto cache = net.forward_with_cache(sample.input);
    const Vector& f = cache.output;
    Vector grad_f = Vector::Zero(f.size());

    if (!store.empty()) {
      const auto scores = store.scores_all(f);
      const auto cl = classification_loss(scores, sample.label);
      out.breakdown.classification += cl.loss;
      grad_f += score_gradient_to_feature(store, f, scores, cl.score_gradient);
    }
    if (snap != nullptr) {
      const auto dl = distillation_loss(f, snap->forward(sample.input));
      out.breakdown.distillation += dl.loss;
      grad_f += lambda * dl.gradient;
    }
    out.gradients += net.backward(cache, grad_f);
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  out.breakdown.classification *= inv;
  out.breakdown.distillation *= inv;
  out.breakdown.total = out.breakdown.classification + lambda * out.breakdown.distillation;
  out.gradients *= inv;
  if (!out.gradients.all_finite() || !std::isfinite(out.breakdown.total)) {
    fail(ErrorKind::Numeric, "loss or gradient is non-finite");
  }
  return out;
}

}  // namespace owr
