#include "owr/baselines.hpp"

#include "owr/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace owr {

namespace {

constexpr double kNormEpsilon = 1e-12;

void check_metric(const LinearMetric& metric, const Vector& v) {
  if (metric.w.size() == 0) fail(ErrorKind::Shape, "metric matrix is empty");
  if (v.size() != metric.w.rows()) {
    fail(ErrorKind::Shape, "feature length " + std::to_string(v.size()) + " does not match metric rows " +
                               std::to_string(metric.w.rows()));
  }
}

}  // namespace

LinearMetric LinearMetric::identity(std::size_t feature_dim, std::size_t metric_dim) {
  if (feature_dim == 0 || metric_dim == 0) fail(ErrorKind::Shape, "metric dimensions must be positive");
  return LinearMetric{Matrix::Identity(static_cast<Eigen::Index>(feature_dim),
                                       static_cast<Eigen::Index>(metric_dim))};
}

void NnoParams::validate() const {
  if (!(tau > 0.0)) fail(ErrorKind::Config, "tau must be positive");
  if (!(eta_tau > 0.0)) fail(ErrorKind::Config, "eta_tau must be positive");
}

double metric_distance(const LinearMetric& metric, const Vector& f, const Vector& mu) {
  check_metric(metric, f);
  check_metric(metric, mu);
  return (metric.w.transpose() * (f - mu)).norm();
}

ClassId ncm_predict(const LinearMetric& metric, const PrototypeStore& store, const Vector& f) {
  if (store.empty()) fail(ErrorKind::EmptyModel, "no known classes");
  const ClassId* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& [id, proto] : store) {
    const double d = metric_distance(metric, f, proto.mean);
    if (best == nullptr || d < best_d) {
      best = &id;
      best_d = d;
    }
  }
  return *best;
}

MetricLossResult ncm_loss_and_grad(const LinearMetric& metric, std::span<const LabeledFeature> data,
                                   const PrototypeStore& store) {
  if (data.empty()) fail(ErrorKind::Data, "metric loss needs at least one sample");
  MetricLossResult out;
  out.gradient = Matrix::Zero(metric.w.rows(), metric.w.cols());
  for (const auto& item : data) {
    check_metric(metric, item.feature);
    const Vector v = item.feature - store.at(item.label).mean;
    const Vector z = metric.w.transpose() * v;
    const double d = z.norm();
    out.loss += 0.5 * d;
    out.gradient += (0.5 / std::sqrt(z.squaredNorm() + kNormEpsilon)) * (v * z.transpose());
  }
  const auto m = static_cast<double>(data.size());
  out.loss /= m;
  out.gradient /= m;
  return out;
}

double nno_score(const NnoParams& params, double metric_dist) {
  return params.eta_tau * (1.0 - metric_dist / params.tau);
}

Prediction nno_predict(const NnoParams& params, const LinearMetric& metric, const PrototypeStore& store,
                       const Vector& f) {
  if (store.empty()) fail(ErrorKind::EmptyModel, "no known classes");
  std::map<ClassId, double> clamped;
  for (const auto& [id, proto] : store) {
    clamped.emplace(id, std::max(0.0, nno_score(params, metric_distance(metric, f, proto.mean))));
  }
  // Rejection fires when every clamped probability is zero, i.e. all scores <= 0.
  return predict_from_scores(clamped, 0.0);
}

void train_metric(LinearMetric& metric, std::span<const LabeledFeature> data, const PrototypeStore& store,
                  const MetricTrainingConfig& config) {
  const double target_norm = metric.w.norm();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto result = ncm_loss_and_grad(metric, data, store);
    metric.w -= config.learning_rate * result.gradient;
    const double n = metric.w.norm();
    if (n > 0.0) metric.w *= target_norm / n;
    if (!metric.w.allFinite()) fail(ErrorKind::Numeric, "metric learning diverged");
  }
}

std::vector<double> default_tau_grid(const LinearMetric& metric, std::span<const LabeledFeature> validation,
                                     const PrototypeStore& store, std::size_t count) {
  double hi = 0.0;
  for (const auto& item : validation) {
    if (!store.contains(item.label)) continue;
    hi = std::max(hi, metric_distance(metric, item.feature, store.at(item.label).mean));
  }
  if (hi <= 0.0) hi = 1.0;
  // Span (0, 2 * max own-class distance]; beyond that every sample is accepted.
  std::vector<double> grid;
  grid.reserve(count);
  for (std::size_t i = 1; i <= count; ++i) {
    grid.push_back(2.0 * hi * static_cast<double>(i) / static_cast<double>(count));
  }
  return grid;
}

double select_tau(const LinearMetric& metric, std::span<const LabeledFeature> validation,
                  const PrototypeStore& store, std::span<const double> candidates) {
  if (candidates.empty()) fail(ErrorKind::Config, "no tau candidates");
  if (validation.empty()) fail(ErrorKind::Data, "tau selection needs validation samples");
  if (store.size() < 2) return *std::max_element(candidates.begin(), candidates.end());

  std::vector<double> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());

  // Distances of each validation sample to each mean, computed once.
  const auto classes = store.classes();
  std::vector<std::vector<double>> dist(validation.size(), std::vector<double>(classes.size()));
  for (std::size_t i = 0; i < validation.size(); ++i) {
    for (std::size_t c = 0; c < classes.size(); ++c) {
      dist[i][c] = metric_distance(metric, validation[i].feature, store.at(classes[c]).mean);
    }
  }

  double best_tau = sorted.front();
  double best_acc = -1.0;
  for (double tau : sorted) {
    double acc_sum = 0.0;
    for (std::size_t held = 0; held < classes.size(); ++held) {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < validation.size(); ++i) {
        std::size_t best_c = classes.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < classes.size(); ++c) {
          if (c == held) continue;
          if (dist[i][c] < best_d) {
            best_d = dist[i][c];
            best_c = c;
          }
        }
        const bool rejected = best_d >= tau;
        if (validation[i].label == classes[held]) {
          correct += rejected ? 1 : 0;
        } else {
          correct += (!rejected && classes[best_c] == validation[i].label) ? 1 : 0;
        }
      }
      acc_sum += static_cast<double>(correct) / static_cast<double>(validation.size());
    }
    const double acc = acc_sum / static_cast<double>(classes.size());
    if (acc > best_acc) {
      best_acc = acc;
      best_tau = tau;
    }
  }
  return best_tau;
}

}  // namespace owr
