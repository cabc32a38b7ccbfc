// owr: command-line driver for open-world recognition runs.
//
//   owr gen-synthetic --out data.csv
//   owr split --data data.csv --out-dir splits/
//   owr train-initial --config run.json --checkpoint init.json
//   owr run-owr --config run.json --metrics metrics.jsonl --checkpoint final.json
//   owr evaluate --checkpoint final.json --data test.csv
//   owr baseline-nno --config run.json
//   owr baseline-ncm --config run.json

#include "owr/checkpoint.hpp"
#include "owr/config.hpp"
#include "owr/error.hpp"
#include "owr/experiment.hpp"
#include "owr/metrics.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string data_path;
  std::string metrics_path;
  std::optional<double> lambda;
  std::optional<double> w_minus;
  std::optional<std::size_t> memory;
  std::optional<std::size_t> epochs_initial;
  std::optional<std::size_t> epochs_incremental;
  std::optional<std::string> oracle;
  std::optional<double> label_noise;
  std::optional<double> feature_shift;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed (overrides the config)");
  cmd->add_option("--data", o.data_path, "CSV dataset (default: synthetic clusters)")->check(CLI::ExistingFile);
  cmd->add_option("--metrics", o.metrics_path, "JSON-lines metrics output");
  cmd->add_option("--lambda", o.lambda, "Distillation weight");
  cmd->add_option("--w-minus", o.w_minus, "Weight of rejected samples in the threshold update");
  cmd->add_option("--memory", o.memory, "Exemplar memory capacity");
  cmd->add_option("--epochs-initial", o.epochs_initial);
  cmd->add_option("--epochs-incremental", o.epochs_incremental);
  cmd->add_option("--oracle", o.oracle, "ground-truth or noisy-web");
  cmd->add_option("--label-noise", o.label_noise, "Label noise rate of the noisy-web oracle");
  cmd->add_option("--feature-shift", o.feature_shift, "Feature shift of the noisy-web oracle");
}

owr::RunConfig resolve_config(const CommonOptions& o) {
  owr::RunConfig c = o.config_path.empty() ? owr::RunConfig{} : owr::load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.lambda) c.lambda = *o.lambda;
  if (o.w_minus) c.w_minus = *o.w_minus;
  if (o.memory) c.memory_capacity = *o.memory;
  if (o.epochs_initial) c.epochs_initial = *o.epochs_initial;
  if (o.epochs_incremental) c.epochs_incremental = *o.epochs_incremental;
  if (o.oracle) c.oracle.kind = *o.oracle;
  if (o.label_noise) c.oracle.label_noise_rate = *o.label_noise;
  if (o.feature_shift) c.oracle.feature_shift = *o.feature_shift;
  c.validate();
  return c;
}

owr::Dataset resolve_data(const CommonOptions& o, const owr::RunConfig& c) {
  return o.data_path.empty() ? owr::synthetic_dataset(c) : owr::load_csv(o.data_path);
}

std::unique_ptr<owr::MetricsWriter> open_metrics(const CommonOptions& o) {
  if (o.metrics_path.empty()) return nullptr;
  return std::make_unique<owr::MetricsWriter>(o.metrics_path, owr::MetricsWriter::Mode::Truncate);
}

json report_json(const owr::EvalReport& r) {
  json per_class = json::object();
  for (const auto& [id, acc] : r.per_class_accuracy) per_class[id.str()] = acc;
  return {{"closed_world_accuracy", r.closed_world_accuracy},
          {"open_world_accuracy", r.open_world_accuracy},
          {"rejection_rate_unknown", r.rejection_rate_unknown},
          {"false_rejection_rate_known", r.false_rejection_rate_known},
          {"known_samples", r.known_samples},
          {"unknown_samples", r.unknown_samples},
          {"per_class_accuracy", per_class}};
}

json class_list(std::span<const owr::ClassId> ids) {
  json out = json::array();
  for (const auto& id : ids) out.push_back(id.str());
  return out;
}

int cmd_gen_synthetic(const CommonOptions& o, const std::string& out, std::optional<std::size_t> classes,
                      std::optional<std::size_t> per_class, std::optional<std::size_t> dim,
                      std::optional<double> sigma, std::optional<double> separation) {
  auto c = resolve_config(o);
  if (classes) c.synthetic.num_classes = *classes;
  if (per_class) c.synthetic.samples_per_class = *per_class;
  if (dim) c.synthetic.dim = *dim;
  if (sigma) c.synthetic.cluster_sigma = *sigma;
  if (separation) c.synthetic.min_center_separation = *separation;
  const auto ds = owr::synthetic_dataset(c);
  owr::write_csv(ds, out);
  std::cout << json{{"samples", ds.size()}, {"classes", class_list(ds.class_ids())}, {"path", out}}.dump() << "\n";
  return 0;
}

int cmd_split(const CommonOptions& o, const std::string& out_dir) {
  const auto c = resolve_config(o);
  const auto split = owr::make_split(c, resolve_data(o, c));
  fs::create_directories(out_dir);
  std::vector<owr::LabeledSample> incremental;
  for (const auto& id : split.incremental_classes) {
    const auto& s = split.train.at(id);
    incremental.insert(incremental.end(), s.begin(), s.end());
  }
  owr::write_csv(owr::Dataset(split.initial_train()), fs::path(out_dir) / "initial_train.csv");
  if (!incremental.empty()) owr::write_csv(owr::Dataset(incremental), fs::path(out_dir) / "incremental_train.csv");
  owr::write_csv(owr::Dataset(split.test_samples()), fs::path(out_dir) / "test.csv");
  const json manifest{{"initial_classes", class_list(split.initial_classes)},
                      {"incremental_classes", class_list(split.incremental_classes)},
                      {"unknown_classes", class_list(split.unknown_classes)}};
  std::ofstream(fs::path(out_dir) / "split.json") << manifest.dump(2) << "\n";
  std::cout << manifest.dump() << "\n";
  return 0;
}

int cmd_train_initial(const CommonOptions& o, const std::string& checkpoint) {
  const auto c = resolve_config(o);
  const auto split = owr::make_split(c, resolve_data(o, c));
  auto metrics = open_metrics(o);
  const auto state = owr::train_initial_model(c, split, metrics.get());
  if (!checkpoint.empty()) owr::save_checkpoint(state, checkpoint);
  std::cout << json{{"known_classes", class_list(state.known_classes)},
                    {"theta", state.threshold.theta},
                    {"eval", report_json(owr::evaluate(state, split.test_samples()))}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_run_owr(const CommonOptions& o, const std::string& checkpoint_in, const std::string& checkpoint_out,
                bool interactive) {
  const auto c = resolve_config(o);
  const auto split = owr::make_split(c, resolve_data(o, c));
  auto metrics = open_metrics(o);
  auto oracle = owr::make_oracle(c, split);
  std::unique_ptr<owr::LabelOracle> human;
  owr::LabelOracle* active = oracle.get();
  if (interactive) {
    human = std::make_unique<owr::HumanVerifiedOracle>(*oracle, std::cin, std::cerr);
    active = human.get();
  }
  auto initial = checkpoint_in.empty() ? owr::train_initial_model(c, split, metrics.get())
                                       : owr::load_checkpoint(checkpoint_in);
  const auto result = owr::continue_owr(c, split, std::move(initial), *active, metrics.get());
  if (!checkpoint_out.empty()) owr::save_checkpoint(result.state, checkpoint_out);

  json steps = json::array();
  for (const auto& s : result.steps) {
    steps.push_back({{"target", s.target.str()},
                     {"added", s.step.label.str()},
                     {"collision", s.step.collision},
                     {"rejection_before", s.rejection_before},
                     {"eval", report_json(s.after)}});
  }
  std::cout << json{{"initial", report_json(result.initial)},
                    {"steps", steps},
                    {"mean_open_world_accuracy", result.mean_open_world_accuracy()}}
                   .dump(2)
            << "\n";
  return 0;
}

int cmd_evaluate(const CommonOptions& o, const std::string& checkpoint) {
  const auto state = owr::load_checkpoint(checkpoint);
  std::vector<owr::LabeledSample> test;
  if (o.data_path.empty()) {
    const auto c = resolve_config(o);
    test = owr::make_split(c, owr::synthetic_dataset(c)).test_samples();
  } else {
    test = owr::load_csv(o.data_path).samples();
  }
  std::cout << report_json(owr::evaluate(state, test)).dump(2) << "\n";
  return 0;
}

int cmd_baseline(const CommonOptions& o, const std::string& checkpoint_in, const std::string& model_out, bool nno) {
  const auto c = resolve_config(o);
  const auto split = owr::make_split(c, resolve_data(o, c));
  auto metrics = open_metrics(o);
  const auto network = checkpoint_in.empty() ? owr::train_initial_model(c, split).network
                                             : owr::load_checkpoint(checkpoint_in).network;
  auto oracle = owr::make_oracle(c, split);
  const auto result = nno ? owr::run_nno_baseline(c, split, network, *oracle, metrics.get())
                          : owr::run_ncm_baseline(c, split, network, *oracle, metrics.get());
  if (!model_out.empty()) owr::save_nno_model(result.model, model_out);
  json steps = json::array();
  for (const auto& r : result.steps) steps.push_back(report_json(r));
  std::cout << json{{"tau", result.model.params.tau},
                    {"initial", report_json(result.initial)},
                    {"steps", steps},
                    {"mean_open_world_accuracy", result.mean_open_world_accuracy()}}
                   .dump(2)
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-world recognition with DeepNNO and NNO/NCM baselines"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string out, out_dir, checkpoint, checkpoint_in, model_out;
  bool interactive = false;
  std::optional<std::size_t> classes, per_class, dim;
  std::optional<double> sigma, separation;

  auto* gen = app.add_subcommand("gen-synthetic", "Write Gaussian clusters to CSV");
  add_common(gen, opts);
  gen->add_option("--out", out, "Output CSV")->required();
  gen->add_option("--classes", classes);
  gen->add_option("--samples-per-class", per_class);
  gen->add_option("--dim", dim);
  gen->add_option("--sigma", sigma);
  gen->add_option("--separation", separation);

  auto* split = app.add_subcommand("split", "Partition classes and write per-partition CSVs");
  add_common(split, opts);
  split->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* train = app.add_subcommand("train-initial", "Train on the initial classes");
  add_common(train, opts);
  train->add_option("--checkpoint", checkpoint, "Checkpoint output");

  auto* run = app.add_subcommand("run-owr", "Run the full incremental protocol");
  add_common(run, opts);
  run->add_option("--from", checkpoint_in, "Start from an initial checkpoint")->check(CLI::ExistingFile);
  run->add_option("--checkpoint", checkpoint, "Checkpoint output");
  run->add_flag("--interactive", interactive, "Confirm each oracle label on stdin");

  auto* eval = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  add_common(eval, opts);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate")->required()->check(CLI::ExistingFile);

  auto* nno = app.add_subcommand("baseline-nno", "Frozen-representation NNO baseline");
  add_common(nno, opts);
  nno->add_option("--from", checkpoint_in, "Take the feature extractor from a checkpoint")->check(CLI::ExistingFile);
  nno->add_option("--model-out", model_out, "Write the NNO model");

  auto* ncm = app.add_subcommand("baseline-ncm", "Closed-world NCM baseline");
  add_common(ncm, opts);
  ncm->add_option("--from", checkpoint_in, "Take the feature extractor from a checkpoint")->check(CLI::ExistingFile);
  ncm->add_option("--model-out", model_out, "Write the model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_synthetic(opts, out, classes, per_class, dim, sigma, separation);
    if (split->parsed()) return cmd_split(opts, out_dir);
    if (train->parsed()) return cmd_train_initial(opts, checkpoint);
    if (run->parsed()) return cmd_run_owr(opts, checkpoint_in, checkpoint, interactive);
    if (eval->parsed()) return cmd_evaluate(opts, checkpoint);
    if (nno->parsed()) return cmd_baseline(opts, checkpoint_in, model_out, true);
    if (ncm->parsed()) return cmd_baseline(opts, checkpoint_in, model_out, false);
  } catch (const owr::Error& e) {
    std::cerr << "owr: " << owr::to_string(e.kind()) << " error: " << e.what() << "\n";
    return owr::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "owr: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
