#include "owr/config.hpp"

#include "owr/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace owr {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (allowed.count(key) == 0) fail(ErrorKind::Config, "unknown config key '" + where + key + "'");
  }
}

}  // namespace

void RunConfig::validate() const {
  initial_schedule().validate();
  incremental_schedule().validate();
  if (memory_capacity == 0) fail(ErrorKind::Config, "memory_capacity must be positive");
  if (embedding_dim == 0) fail(ErrorKind::Config, "embedding_dim must be positive");
  for (auto h : hidden_layers) {
    if (h == 0) fail(ErrorKind::Config, "hidden layer widths must be positive");
  }
  if (oracle.kind != "ground-truth" && oracle.kind != "noisy-web") {
    fail(ErrorKind::Config, "oracle.kind must be 'ground-truth' or 'noisy-web'");
  }
  if (!(oracle.label_noise_rate >= 0.0 && oracle.label_noise_rate <= 1.0)) {
    fail(ErrorKind::Config, "oracle.label_noise_rate must lie in [0, 1]");
  }
  if (!(oracle.feature_shift >= 0.0)) fail(ErrorKind::Config, "oracle.feature_shift must be non-negative");
  if (split.num_known_initial == 0 || split.num_known_total < split.num_known_initial) {
    fail(ErrorKind::Config, "split needs 0 < num_known_initial <= num_known_total");
  }
  if (!(split.test_fraction > 0.0 && split.test_fraction < 1.0)) {
    fail(ErrorKind::Config, "split.test_fraction must lie in (0, 1)");
  }
  if (!(baseline.eta_tau > 0.0)) fail(ErrorKind::Config, "baseline.eta_tau must be positive");
  if (!(baseline.tau >= 0.0)) fail(ErrorKind::Config, "baseline.tau must be non-negative");
  if (baseline.tau_grid == 0) fail(ErrorKind::Config, "baseline.tau_grid must be positive");
}

NetworkArchitecture RunConfig::architecture() const { return NetworkArchitecture{hidden_layers, embedding_dim}; }

TrainingSchedule RunConfig::initial_schedule() const {
  TrainingSchedule s;
  s.epochs = epochs_initial;
  s.batch = BatchSpec{batch_size, memory_ratio};
  s.sgd = SgdConfig{learning_rate, momentum, weight_decay, gradient_clip};
  s.lambda = lambda;
  s.weights = RejectionWeights{w_plus, w_minus};
  s.count_reset = count_reset;
  s.lr_schedule = lr_schedule;
  s.reset_threshold_each_step = reset_threshold_each_step;
  s.recompute_means_from_memory = recompute_means_from_memory;
  return s;
}

TrainingSchedule RunConfig::incremental_schedule() const {
  auto s = initial_schedule();
  s.epochs = epochs_incremental;
  return s;
}

RunConfig config_from_json(const std::string& text) {
  RunConfig c;
  try {
    const auto j = json::parse(text);
    if (!j.is_object()) fail(ErrorKind::Config, "config must be a JSON object");
    reject_unknown_keys(j,
                        {"lambda", "w_plus", "w_minus", "memory_capacity", "memory_ratio", "batch_size",
                         "epochs_initial", "epochs_incremental", "learning_rate", "momentum", "weight_decay", "gradient_clip",
                         "hidden_layers", "embedding_dim", "seed", "count_reset", "lr_schedule",
                         "reset_threshold_each_step", "recompute_means_from_memory", "oracle", "split",
                         "synthetic", "baseline"},
                        "");
    read(j, "lambda", c.lambda);
    read(j, "w_plus", c.w_plus);
    read(j, "w_minus", c.w_minus);
    read(j, "memory_capacity", c.memory_capacity);
    read(j, "memory_ratio", c.memory_ratio);
    read(j, "batch_size", c.batch_size);
    read(j, "epochs_initial", c.epochs_initial);
    read(j, "epochs_incremental", c.epochs_incremental);
    read(j, "learning_rate", c.learning_rate);
    read(j, "momentum", c.momentum);
    read(j, "gradient_clip", c.gradient_clip);
    read(j, "weight_decay", c.weight_decay);
    read(j, "hidden_layers", c.hidden_layers);
    read(j, "embedding_dim", c.embedding_dim);
    read(j, "seed", c.seed);
    if (j.contains("lr_schedule")) c.lr_schedule = lr_schedule_from_string(j.at("lr_schedule").get<std::string>());
    if (j.contains("count_reset")) c.count_reset = count_reset_from_string(j.at("count_reset").get<std::string>());
    read(j, "reset_threshold_each_step", c.reset_threshold_each_step);
    read(j, "recompute_means_from_memory", c.recompute_means_from_memory);
    if (j.contains("oracle")) {
      const auto& o = j.at("oracle");
      reject_unknown_keys(o, {"kind", "label_noise_rate", "feature_shift", "samples_per_query"}, "oracle.");
      read(o, "kind", c.oracle.kind);
      read(o, "label_noise_rate", c.oracle.label_noise_rate);
      read(o, "feature_shift", c.oracle.feature_shift);
      read(o, "samples_per_query", c.oracle.samples_per_query);
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      reject_unknown_keys(s, {"num_known_initial", "num_known_total", "test_fraction"}, "split.");
      read(s, "num_known_initial", c.split.num_known_initial);
      read(s, "num_known_total", c.split.num_known_total);
      read(s, "test_fraction", c.split.test_fraction);
    }
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      reject_unknown_keys(s, {"num_classes", "samples_per_class", "dim", "cluster_sigma", "min_center_separation", "seed"},
                          "synthetic.");
      read(s, "num_classes", c.synthetic.num_classes);
      read(s, "samples_per_class", c.synthetic.samples_per_class);
      read(s, "dim", c.synthetic.dim);
      read(s, "cluster_sigma", c.synthetic.cluster_sigma);
      read(s, "min_center_separation", c.synthetic.min_center_separation);
      read(s, "seed", c.synthetic.seed);
    }
    if (j.contains("baseline")) {
      const auto& b = j.at("baseline");
      reject_unknown_keys(b, {"metric_epochs", "metric_learning_rate", "eta_tau", "tau", "tau_grid"}, "baseline.");
      read(b, "metric_epochs", c.baseline.metric_epochs);
      read(b, "metric_learning_rate", c.baseline.metric_learning_rate);
      read(b, "eta_tau", c.baseline.eta_tau);
      read(b, "tau", c.baseline.tau);
      read(b, "tau_grid", c.baseline.tau_grid);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("invalid config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const RunConfig& c) {
  json j{{"lambda", c.lambda},
         {"w_plus", c.w_plus},
         {"w_minus", c.w_minus},
         {"memory_capacity", c.memory_capacity},
         {"memory_ratio", c.memory_ratio},
         {"batch_size", c.batch_size},
         {"epochs_initial", c.epochs_initial},
         {"epochs_incremental", c.epochs_incremental},
         {"learning_rate", c.learning_rate},
         {"momentum", c.momentum},
         {"gradient_clip", c.gradient_clip},
         {"weight_decay", c.weight_decay},
         {"hidden_layers", c.hidden_layers},
         {"embedding_dim", c.embedding_dim},
         {"seed", c.seed},
         {"count_reset", to_string(c.count_reset)},
         {"lr_schedule", to_string(c.lr_schedule)},
         {"reset_threshold_each_step", c.reset_threshold_each_step},
         {"recompute_means_from_memory", c.recompute_means_from_memory},
         {"oracle",
          {{"kind", c.oracle.kind},
           {"label_noise_rate", c.oracle.label_noise_rate},
           {"feature_shift", c.oracle.feature_shift},
           {"samples_per_query", c.oracle.samples_per_query}}},
         {"split",
          {{"num_known_initial", c.split.num_known_initial},
           {"num_known_total", c.split.num_known_total},
           {"test_fraction", c.split.test_fraction}}},
         {"synthetic",
          {{"num_classes", c.synthetic.num_classes},
           {"samples_per_class", c.synthetic.samples_per_class},
           {"dim", c.synthetic.dim},
           {"cluster_sigma", c.synthetic.cluster_sigma},
           {"min_center_separation", c.synthetic.min_center_separation},
           {"seed", c.synthetic.seed}}},
         {"baseline",
          {{"metric_epochs", c.baseline.metric_epochs},
           {"metric_learning_rate", c.baseline.metric_learning_rate},
           {"eta_tau", c.baseline.eta_tau},
           {"tau", c.baseline.tau},
           {"tau_grid", c.baseline.tau_grid}}}};
  return j.dump(2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace owr
