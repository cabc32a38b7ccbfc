#include "owr/protocol.hpp"

#include "owr/error.hpp"
#include "owr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>

namespace owr {

namespace {

LossBreakdown weighted_mean(const std::vector<std::pair<LossBreakdown, std::size_t>>& parts, double lambda) {
  LossBreakdown out;
  out.lambda = lambda;
  std::size_t n = 0;
  for (const auto& [b, count] : parts) {
    out.classification += b.classification * static_cast<double>(count);
    out.distillation += b.distillation * static_cast<double>(count);
    n += count;
  }
  if (n > 0) {
    out.classification /= static_cast<double>(n);
    out.distillation /= static_cast<double>(n);
  }
  out.total = out.classification + lambda * out.distillation;
  return out;
}

// One optimisation step followed by the mean (Eq. running mean) and threshold
// updates computed with the updated network.
LossBreakdown train_batch(OwrState& state, SgdOptimizer& optimizer, std::span<const LabeledSample> batch,
                          const NetworkSnapshot* teacher, const TrainingSchedule& schedule) {
  auto objective = total_loss(batch, state.network, teacher, state.prototypes, schedule.lambda);
  optimizer.step(state.network, objective.gradients);

  std::vector<LabeledFeature> features;
  features.reserve(batch.size());
  for (const auto& s : batch) features.push_back({s.label, state.network.forward(s.input)});
  state.prototypes.update_means(features);

  std::map<ClassId, std::vector<double>> own_scores;
  for (const auto& f : features) {
    own_scores[f.label].push_back(state.prototypes.probability_score(f.label, f.feature));
  }
  std::vector<double> averages;
  averages.reserve(own_scores.size());
  for (const auto& [_, scores] : own_scores) {
    if (auto avg = batch_class_average(scores, state.threshold.theta, schedule.weights)) averages.push_back(*avg);
  }
  update_threshold(state.threshold, averages);
  return objective.breakdown;
}

PhaseReport run_phase(OwrState& state, std::span<const LabeledSample> new_data, const NetworkSnapshot* teacher,
                      const TrainingSchedule& schedule, std::uint64_t seed, const char* phase,
                      MetricsWriter* metrics) {
  std::mt19937_64 rng(seed);
  SgdOptimizer optimizer(schedule.sgd, state.network);
  const double lambda = teacher != nullptr ? schedule.lambda : 0.0;

  PhaseReport report;
  if (schedule.count_reset == CountReset::Phase) state.prototypes.reset_counts();
  for (std::size_t epoch = 0; epoch < schedule.epochs; ++epoch) {
    if (schedule.count_reset == CountReset::Epoch) state.prototypes.reset_counts();
    if (schedule.lr_schedule == LrSchedule::Cosine) {
      const double frac = static_cast<double>(epoch) / static_cast<double>(schedule.epochs);
      optimizer.set_learning_rate(schedule.sgd.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * frac)));
    }
    const auto batches = epoch_batches(state.memory, new_data, schedule.batch, rng);
    std::vector<std::pair<LossBreakdown, std::size_t>> parts;
    parts.reserve(batches.size());
    for (const auto& batch : batches) {
      parts.emplace_back(train_batch(state, optimizer, batch, teacher, schedule), batch.size());
      ++report.batches;
    }
    const auto epoch_loss = weighted_mean(parts, lambda);
    report.epoch_losses.push_back(epoch_loss);
    if (metrics != nullptr) {
      MetricsRecord rec;
      rec.phase = phase;
      rec.step = state.incremental_step;
      rec.epoch = epoch;
      rec.loss = epoch_loss;
      rec.theta = state.threshold.theta;
      metrics->write(rec);
    }
  }
  report.theta = state.threshold.theta;
  return report;
}

std::vector<Exemplar> exemplars_for(const OwrState& state, const ClassId& id,
                                    std::span<const LabeledSample> samples) {
  std::vector<Exemplar> out;
  for (const auto& s : samples) {
    if (s.label == id) out.push_back({s, relevance(state.prototypes, s, state.network)});
  }
  return out;
}

void recompute_means_from_memory(OwrState& state) {
  for (const auto& [id, list] : state.memory.per_class()) {
    if (list.empty() || !state.prototypes.contains(id)) continue;
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(state.prototypes.dim()));
    for (const auto& e : list) sum += state.network.forward(e.sample.input);
    auto proto = state.prototypes.at(id);
    proto.mean = sum / static_cast<double>(list.size());
    state.prototypes.set(std::move(proto));
  }
}

void finish_phase(OwrState& state, const TrainingSchedule& schedule) {
  state.memory.refresh_relevance(state.network, state.prototypes);
  state.memory.prune(state.known_classes.size());
  if (schedule.recompute_means_from_memory) recompute_means_from_memory(state);
}

}  // namespace

std::string to_string(CountReset r) {
  switch (r) {
    case CountReset::Never: return "never";
    case CountReset::Phase: return "phase";
    case CountReset::Epoch: return "epoch";
  }
  return "never";
}

CountReset count_reset_from_string(const std::string& s) {
  if (s == "never") return CountReset::Never;
  if (s == "phase") return CountReset::Phase;
  if (s == "epoch") return CountReset::Epoch;
  fail(ErrorKind::Config, "count_reset must be never, phase or epoch (got '" + s + "')");
}

std::string to_string(LrSchedule s) { return s == LrSchedule::Cosine ? "cosine" : "constant"; }

LrSchedule lr_schedule_from_string(const std::string& s) {
  if (s == "constant") return LrSchedule::Constant;
  if (s == "cosine") return LrSchedule::Cosine;
  fail(ErrorKind::Config, "lr_schedule must be constant or cosine (got '" + s + "')");
}

void TrainingSchedule::validate() const {
  batch.validate();
  sgd.validate();
  weights.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorKind::Config, "lambda must be non-negative");
}

bool OwrState::is_known(const ClassId& id) const {
  return std::find(known_classes.begin(), known_classes.end(), id) != known_classes.end();
}

OwrState make_state(std::size_t input_dim, const NetworkArchitecture& arch, std::size_t memory_capacity,
                    std::uint64_t seed) {
  return OwrState{{},
                  EmbeddingNetwork::glorot(input_dim, arch.hidden, arch.embedding_dim, seed),
                  std::nullopt,
                  PrototypeStore(arch.embedding_dim),
                  ThresholdState{},
                  ExemplarMemory(memory_capacity),
                  0,
                  0,
                  {}};
}

PhaseReport train_initial(OwrState& state, std::span<const LabeledSample> data,
                          std::span<const ClassId> declared_classes, const TrainingSchedule& schedule,
                          std::uint64_t seed, MetricsWriter* metrics) {
  schedule.validate();
  if (!state.known_classes.empty() || state.incremental_step != 0) {
    fail(ErrorKind::Protocol, "initial training requires a fresh state");
  }
  if (data.empty()) fail(ErrorKind::Data, "initial training set is empty");

  const std::set<ClassId> declared(declared_classes.begin(), declared_classes.end());
  std::set<ClassId> present;
  for (const auto& s : data) {
    if (declared.count(s.label) == 0) {
      fail(ErrorKind::Protocol, "label '" + s.label.str() + "' is not among the declared initial classes");
    }
    present.insert(s.label);
  }
  if (present != declared) fail(ErrorKind::Protocol, "every declared initial class needs training samples");

  auto report = run_phase(state, data, nullptr, schedule, seed, "initial", metrics);

  state.known_classes.assign(declared.begin(), declared.end());
  for (const auto& id : state.known_classes) state.memory.admit_class(id, exemplars_for(state, id, data));
  finish_phase(state, schedule);
  return report;
}

Prediction predict(const OwrState& state, const Vector& input) {
  if (state.prototypes.empty()) fail(ErrorKind::EmptyModel, "model has not been trained");
  return predict_deepnno(state.prototypes, state.threshold, state.network.forward(input));
}

Prediction discover(OwrState& state, const OracleQuery& query) {
  auto p = predict(state, query.input);
  if (p.is_unknown()) state.unknown_queue.push_back(query);
  return p;
}

StepReport incremental_step(OwrState& state, LabelOracle& oracle, const OracleQuery& trigger,
                            const TrainingSchedule& schedule, std::uint64_t seed, MetricsWriter* metrics) {
  schedule.validate();
  if (state.known_classes.empty()) fail(ErrorKind::Protocol, "incremental step needs a trained model");

  auto answer = oracle.query(trigger);
  StepReport report;
  report.label = answer.label;
  report.collision = state.is_known(answer.label);
  if (report.collision) ++state.oracle_collisions;

  std::vector<LabeledSample> data;
  data.reserve(answer.samples.size());
  for (auto& s : answer.samples) {
    if (static_cast<std::size_t>(s.input.size()) != state.network.input_dim()) {
      fail(ErrorKind::Shape, "oracle sample dimension does not match the network input");
    }
    if (s.label == answer.label || state.is_known(s.label)) {
      data.push_back(std::move(s));
    } else {
      ++report.samples_dropped;
    }
  }
  report.samples_used = data.size();
  const bool has_new_class_data =
      std::any_of(data.begin(), data.end(), [&](const LabeledSample& s) { return s.label == answer.label; });
  if (!report.collision && !has_new_class_data) {
    fail(ErrorKind::Protocol, "oracle returned no training data for new class '" + answer.label.str() + "'");
  }

  state.snapshot.emplace(state.network);
  if (schedule.reset_threshold_each_step) state.threshold = ThresholdState{};

  state.incremental_step += 1;
  report.training = run_phase(state, data, &*state.snapshot, schedule, seed, "incremental", metrics);

  if (!report.collision) {
    state.known_classes.push_back(answer.label);
    state.memory.admit_class(answer.label, exemplars_for(state, answer.label, data));
  }
  finish_phase(state, schedule);
  return report;
}

std::optional<StepReport> process_next_unknown(OwrState& state, LabelOracle& oracle,
                                               const TrainingSchedule& schedule, std::uint64_t seed,
                                               MetricsWriter* metrics) {
  if (state.unknown_queue.empty()) return std::nullopt;
  const auto query = state.unknown_queue.front();
  state.unknown_queue.pop_front();
  return incremental_step(state, oracle, query, schedule, seed, metrics);
}

EvalReport evaluate(const OwrState& state, std::span<const LabeledSample> test) {
  if (test.empty()) fail(ErrorKind::Data, "evaluation set is empty");
  EvalTally tally({state.known_classes.begin(), state.known_classes.end()});
  for (const auto& s : test) tally.add(s.label, predict(state, s.input));
  return tally.report();
}

}  // namespace owr
