#include "owr/experiment.hpp"

#include "owr/baselines.hpp"
#include "owr/error.hpp"
#include "owr/metrics.hpp"

#include <algorithm>
#include <functional>
#include <limits>

namespace owr {

namespace {

std::vector<LabeledSample> pool_of(const OpenWorldSplit& split, std::span<const ClassId> classes) {
  std::vector<LabeledSample> out;
  for (const auto& id : classes) {
    const auto& s = split.train.at(id);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

/// First candidate the model rejects; otherwise the least confidently accepted one.
OracleQuery select_trigger(const std::vector<LabeledSample>& candidates,
                           const std::function<Prediction(const Vector&)>& predict_fn,
                           const std::function<double(const Vector&)>& confidence_fn) {
  if (candidates.empty()) fail(ErrorKind::Data, "no deployment samples for the scripted class");
  const LabeledSample* fallback = nullptr;
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& s : candidates) {
    if (predict_fn(s.input).is_unknown()) return OracleQuery{s.input, s.label};
    const double c = confidence_fn(s.input);
    if (c < lowest) {
      lowest = c;
      fallback = &s;
    }
  }
  return OracleQuery{fallback->input, fallback->label};
}

double rejection_rate(const std::vector<LabeledSample>& samples, const std::function<Prediction(const Vector&)>& fn) {
  if (samples.empty()) return 0.0;
  std::size_t rejected = 0;
  for (const auto& s : samples) rejected += fn(s.input).is_unknown() ? 1 : 0;
  return static_cast<double>(rejected) / static_cast<double>(samples.size());
}

void emit_eval(MetricsWriter* metrics, const char* phase, std::size_t step, double theta, const EvalReport& report,
               const std::optional<ClassId>& added) {
  if (metrics == nullptr) return;
  MetricsRecord rec;
  rec.phase = phase;
  rec.step = step;
  rec.theta = theta;
  rec.eval = report;
  rec.added_class = added;
  metrics->write(rec);
}

double mean_open(const EvalReport& initial, const std::vector<const EvalReport*>& steps) {
  double sum = initial.open_world_accuracy;
  for (const auto* r : steps) sum += r->open_world_accuracy;
  return sum / static_cast<double>(steps.size() + 1);
}

std::vector<LabeledFeature> embed(const EmbeddingNetwork& net, std::span<const LabeledSample> samples) {
  std::vector<LabeledFeature> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({s.label, net.forward(s.input)});
  return out;
}

using FrozenPredictor = std::function<Prediction(const NnoModel&, const Vector&)>;

BaselineRunResult run_frozen_baseline(const RunConfig& config, const OpenWorldSplit& split,
                                      const EmbeddingNetwork& frozen, LabelOracle& oracle, MetricsWriter* metrics,
                                      const char* phase, const FrozenPredictor& predictor) {
  const auto train = split.initial_train();
  const auto features = embed(frozen, train);
  PrototypeStore store(frozen.output_dim());
  store.update_means(features);

  auto metric = LinearMetric::identity(frozen.output_dim(), frozen.output_dim());
  train_metric(metric, features, store, {config.baseline.metric_epochs, config.baseline.metric_learning_rate});

  NnoParams params{config.baseline.tau, config.baseline.eta_tau};
  if (params.tau <= 0.0) {
    const auto grid = default_tau_grid(metric, features, store, config.baseline.tau_grid);
    params.tau = select_tau(metric, features, store, grid);
  }
  params.validate();

  BaselineRunResult result{NnoModel{frozen, metric, params, std::move(store)}, {}, {}};
  const auto test = split.test_samples();

  auto evaluate_model = [&](const NnoModel& model) {
    const auto classes = model.prototypes.classes();
    EvalTally tally(std::set<ClassId>(classes.begin(), classes.end()));
    for (const auto& s : test) tally.add(s.label, predictor(model, model.network.forward(s.input)));
    return tally.report();
  };

  result.initial = evaluate_model(result.model);
  emit_eval(metrics, phase, 0, result.model.params.tau, result.initial, std::nullopt);

  std::size_t step = 0;
  for (const auto& target : split.incremental_classes) {
    ++step;
    auto& model = result.model;
    const auto trigger = select_trigger(
        split.test_of(target), [&](const Vector& x) { return predictor(model, model.network.forward(x)); },
        [&](const Vector& x) {
          const auto f = model.network.forward(x);
          double best = -std::numeric_limits<double>::infinity();
          for (const auto& [_, p] : model.prototypes) best = std::max(best, -metric_distance(model.metric, f, p.mean));
          return best;
        });
    const auto answer = oracle.query(trigger);
    std::vector<LabeledFeature> new_feats;
    for (const auto& s : answer.samples) {
      if (s.label == answer.label) new_feats.push_back({s.label, model.network.forward(s.input)});
    }
    // Frozen protocol: W and τ stay fixed; only the new class mean is added.
    if (!model.prototypes.contains(answer.label)) model.prototypes.update_means(new_feats);
    result.steps.push_back(evaluate_model(model));
    emit_eval(metrics, phase, step, model.params.tau, result.steps.back(), answer.label);
  }
  return result;
}

}  // namespace

std::uint64_t stream_seed(const RunConfig& config, SeedStream stream, std::uint64_t offset) {
  return derive_seed(config.seed, static_cast<std::uint64_t>(stream) + offset);
}

Dataset synthetic_dataset(const RunConfig& config) {
  auto spec = config.synthetic;
  spec.seed = stream_seed(config, SeedStream::Synthetic);
  return generate_synthetic(spec).data;
}

OpenWorldSplit make_split(const RunConfig& config, const Dataset& dataset) {
  return split_open_world(dataset, config.split.num_known_initial, config.split.num_known_total,
                          stream_seed(config, SeedStream::Split), config.split.test_fraction);
}

std::unique_ptr<LabelOracle> make_oracle(const RunConfig& config, const OpenWorldSplit& split) {
  const auto pool = pool_of(split, split.incremental_classes);
  std::size_t n_query = config.oracle.samples_per_query;
  if (n_query == 0) n_query = std::max<std::size_t>(pool.size(), 1);

  if (config.oracle.kind == "ground-truth") return std::make_unique<GroundTruthOracle>(pool, n_query);
  if (config.oracle.kind == "noisy-web") {
    std::vector<ClassId> label_space = split.initial_classes;
    label_space.insert(label_space.end(), split.incremental_classes.begin(), split.incremental_classes.end());
    return std::make_unique<NoisyWebOracle>(pool, n_query, config.oracle.label_noise_rate, config.oracle.feature_shift,
                                            std::move(label_space), stream_seed(config, SeedStream::Oracle));
  }
  fail(ErrorKind::Config, "unknown oracle kind '" + config.oracle.kind + "'");
}

OwrState train_initial_model(const RunConfig& config, const OpenWorldSplit& split, MetricsWriter* metrics) {
  config.validate();
  const auto train = split.initial_train();
  if (train.empty()) fail(ErrorKind::Data, "initial classes have no training samples");
  auto state = make_state(static_cast<std::size_t>(train.front().input.size()), config.architecture(),
                          config.memory_capacity, stream_seed(config, SeedStream::NetworkInit));
  train_initial(state, train, split.initial_classes, config.initial_schedule(),
                stream_seed(config, SeedStream::InitialTraining), metrics);
  return state;
}

double OwrRunResult::mean_open_world_accuracy() const {
  std::vector<const EvalReport*> s;
  for (const auto& o : steps) s.push_back(&o.after);
  return mean_open(initial, s);
}

double BaselineRunResult::mean_open_world_accuracy() const {
  std::vector<const EvalReport*> s;
  for (const auto& r : steps) s.push_back(&r);
  return mean_open(initial, s);
}

OwrRunResult run_owr(const RunConfig& config, const OpenWorldSplit& split, LabelOracle& oracle,
                     MetricsWriter* metrics) {
  return continue_owr(config, split, train_initial_model(config, split, metrics), oracle, metrics);
}

OwrRunResult continue_owr(const RunConfig& config, const OpenWorldSplit& split, OwrState state, LabelOracle& oracle,
                          MetricsWriter* metrics) {
  const auto test = split.test_samples();
  OwrRunResult result{std::move(state), {}, {}};
  auto& st = result.state;

  result.initial = evaluate(st, test);
  emit_eval(metrics, "eval", st.incremental_step, st.threshold.theta, result.initial, std::nullopt);

  const auto predict_fn = [&](const Vector& x) { return predict(st, x); };
  const auto confidence_fn = [&](const Vector& x) {
    const auto scores = st.prototypes.scores_all(st.network.forward(x));
    double best = 0.0;
    for (const auto& [_, p] : scores) best = std::max(best, p);
    return best;
  };

  std::size_t index = 0;
  for (const auto& target : split.incremental_classes) {
    StepOutcome outcome;
    outcome.target = target;
    const auto deployment = split.test_of(target);
    outcome.rejection_before = rejection_rate(deployment, predict_fn);
    const auto trigger = select_trigger(deployment, predict_fn, confidence_fn);
    outcome.step = incremental_step(st, oracle, trigger, config.incremental_schedule(),
                                    stream_seed(config, SeedStream::IncrementalTraining, index), metrics);
    outcome.after = evaluate(st, test);
    emit_eval(metrics, "eval", st.incremental_step, st.threshold.theta, outcome.after, outcome.step.label);
    result.steps.push_back(std::move(outcome));
    ++index;
  }
  return result;
}

BaselineRunResult run_nno_baseline(const RunConfig& config, const OpenWorldSplit& split,
                                   const EmbeddingNetwork& frozen, LabelOracle& oracle, MetricsWriter* metrics) {
  return run_frozen_baseline(config, split, frozen, oracle, metrics, "baseline-nno",
                             [](const NnoModel& m, const Vector& f) {
                               return nno_predict(m.params, m.metric, m.prototypes, f);
                             });
}

BaselineRunResult run_ncm_baseline(const RunConfig& config, const OpenWorldSplit& split,
                                   const EmbeddingNetwork& frozen, LabelOracle& oracle, MetricsWriter* metrics) {
  return run_frozen_baseline(config, split, frozen, oracle, metrics, "baseline-ncm",
                             [](const NnoModel& m, const Vector& f) {
                               return Prediction::known(ncm_predict(m.metric, m.prototypes, f));
                             });
}

}  // namespace owr
