#include "owr/checkpoint.hpp"
#include "owr/config.hpp"
#include "owr/dataset.hpp"
#include "owr/error.hpp"
#include "owr/experiment.hpp"
#include "owr/metrics.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

namespace owr {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("owr_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

void expect_error(const std::function<void()>& f, ErrorKind kind, const std::string& fragment = "") {
  try {
    f();
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
    if (!fragment.empty()) EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

using Csv = TempDir;

TEST_F(Csv, TwoRows) {
  const auto ds = load_csv(write("a.csv", "label,f0,f1\nA,1.0,2.0\nB,-3,4.5e-1\n"));
  EXPECT_EQ(ds.dim(), 2u);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.samples()[0].label, ClassId{"A"});
  EXPECT_EQ(ds.samples()[1].input, (Vector{{-3.0, 0.45}}));
  EXPECT_EQ(ds.class_ids(), (std::vector<ClassId>{ClassId{"A"}, ClassId{"B"}}));
}

TEST_F(Csv, MalformedNumberNamesLine) {
  const auto p = write("a.csv", "label,f0,f1\nA,1.0,x\n");
  expect_error([&] { (void)load_csv(p); }, ErrorKind::Data, ":2:");
}

TEST_F(Csv, WidthMismatchNamesLine) {
  const auto p = write("a.csv", "label,f0,f1\nA,1,2\nB,1\n");
  expect_error([&] { (void)load_csv(p); }, ErrorKind::Data, ":3:");
}

TEST_F(Csv, EmptyBodyAndMissingFile) {
  const auto p = write("a.csv", "label,f0\n");
  expect_error([&] { (void)load_csv(p); }, ErrorKind::Data);
  expect_error([&] { (void)load_csv(dir_ / "missing.csv"); }, ErrorKind::Io);
  const auto bad = write("b.csv", "name,f0\nA,1\n");
  expect_error([&] { (void)load_csv(bad); }, ErrorKind::Data);
}

TEST_F(Csv, RoundTripIsExact) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 1e3);
  std::vector<LabeledSample> samples;
  for (int i = 0; i < 200; ++i) {
    Vector x(5);
    for (int j = 0; j < 5; ++j) x(j) = g(rng) * std::pow(10.0, static_cast<double>(i % 20) - 10.0);
    samples.push_back({x, ClassId{"c" + std::to_string(i % 7)}});
  }
  samples.push_back({Vector{{0.1, 1e-300, 5e-324, -0.0, 1.7976931348623157e308}}, ClassId{"edge"}});
  const Dataset ds(samples);
  const auto p = dir_ / "rt.csv";
  write_csv(ds, p);
  EXPECT_TRUE(load_csv(p) == ds);
}

TEST(Synthetic, DeterministicWithExactCounts) {
  SyntheticSpec spec;
  spec.seed = 4;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  EXPECT_TRUE(a.data == b.data);
  EXPECT_EQ(a.data.size(), 6u * 200u);
  for (const auto& id : a.data.class_ids()) EXPECT_EQ(a.data.of_class(id).size(), 200u);
  spec.seed = 5;
  EXPECT_FALSE(generate_synthetic(spec).data == a.data);
}

TEST(Synthetic, CentersSeparatedAndMeansClose) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticSpec spec;
    spec.seed = seed;
    spec.dim = 3;
    const auto s = generate_synthetic(spec);
    for (const auto& [a, ca] : s.centers) {
      for (const auto& [b, cb] : s.centers) {
        if (a < b) EXPECT_GE((ca - cb).norm(), spec.min_center_separation);
      }
      Vector mean = Vector::Zero(3);
      const auto samples = s.data.of_class(a);
      for (const auto& x : samples) mean += x.input;
      mean /= static_cast<double>(samples.size());
      const double bound = 3.0 * spec.cluster_sigma / std::sqrt(static_cast<double>(samples.size()));
      for (int j = 0; j < 3; ++j) EXPECT_LE(std::abs(mean(j) - ca(j)), bound) << "seed " << seed;
    }
  }
}

TEST(Synthetic, InvalidAndInfeasible) {
  SyntheticSpec spec;
  spec.cluster_sigma = 0.0;
  expect_error([&] { (void)generate_synthetic(spec); }, ErrorKind::Config);
  spec = {};
  spec.min_center_separation = -1.0;
  expect_error([&] { (void)generate_synthetic(spec); }, ErrorKind::Config);
}

OpenWorldSplit six_class_split(std::size_t initial, std::size_t total) {
  SyntheticSpec spec;
  spec.samples_per_class = 50;
  return split_open_world(generate_synthetic(spec).data, initial, total, 3);
}

TEST(Split, Exhaustive) {
  const auto s = six_class_split(3, 6);
  EXPECT_EQ(s.initial_classes.size(), 3u);
  EXPECT_EQ(s.incremental_classes.size(), 3u);
  EXPECT_TRUE(s.unknown_classes.empty());
}

TEST(Split, NeverKnownClasses) {
  const auto s = six_class_split(3, 3);
  EXPECT_EQ(s.initial_classes.size(), 3u);
  EXPECT_TRUE(s.incremental_classes.empty());
  EXPECT_EQ(s.unknown_classes.size(), 3u);
}

TEST(Split, PartitionAndReproducible) {
  const auto s = six_class_split(2, 4);
  std::set<ClassId> all;
  std::size_t count = 0;
  for (const auto* part : {&s.initial_classes, &s.incremental_classes, &s.unknown_classes}) {
    all.insert(part->begin(), part->end());
    count += part->size();
  }
  EXPECT_EQ(all.size(), 6u);
  EXPECT_EQ(count, 6u);
  for (const auto& id : all) {
    EXPECT_EQ(s.train.at(id).size(), 35u);
    EXPECT_EQ(s.test.at(id).size(), 15u);
  }
  const auto again = six_class_split(2, 4);
  EXPECT_EQ(again.incremental_classes, s.incremental_classes);
  EXPECT_EQ(again.test.at(s.initial_classes[0])[0].input, s.test.at(s.initial_classes[0])[0].input);
}

TEST(Split, TooFewClasses) {
  SyntheticSpec spec;
  spec.samples_per_class = 10;
  const auto ds = generate_synthetic(spec).data;
  expect_error([&] { (void)split_open_world(ds, 3, 7, 1); }, ErrorKind::Data);
  expect_error([&] { (void)split_open_world(ds, 4, 3, 1); }, ErrorKind::Config);
}

using Metrics = TempDir;

TEST_F(Metrics, TwoLinesParseIndependently) {
  const auto p = dir_ / "m.jsonl";
  {
    MetricsWriter w(p);
    MetricsRecord a;
    a.phase = "initial";
    a.epoch = 3;
    a.loss = LossBreakdown{0.5, 0.0, 0.5, 0.0};
    a.theta = 0.123456789012345;
    w.write(a);
    MetricsRecord b;
    b.phase = "eval";
    b.step = 2;
    b.theta = 0.25;
    b.eval = EvalReport{0.9, 0.8, 0.7, 0.1, {{ClassId{"A"}, 0.9}}, 10, 5};
    b.added_class = ClassId{"A"};
    w.write(b);
    EXPECT_EQ(w.lines_written(), 2u);
  }
  std::ifstream in(p);
  std::string l1, l2, extra;
  ASSERT_TRUE(std::getline(in, l1));
  ASSERT_TRUE(std::getline(in, l2));
  EXPECT_FALSE(std::getline(in, extra));
  const auto r1 = parse_metrics_line(l1);
  const auto r2 = parse_metrics_line(l2);
  EXPECT_EQ(r1.phase, "initial");
  EXPECT_EQ(r1.epoch, 3u);
  EXPECT_EQ(r1.theta, 0.123456789012345);
  EXPECT_EQ(r2.step, 2u);
  ASSERT_TRUE(r2.eval.has_value());
  EXPECT_EQ(r2.eval->open_world_accuracy, 0.8);
  EXPECT_EQ(r2.eval->per_class_accuracy.at(ClassId{"A"}), 0.9);
  EXPECT_EQ(r2.added_class, ClassId{"A"});
}

TEST_F(Metrics, AppendAndTruncate) {
  const auto p = dir_ / "m.jsonl";
  MetricsRecord r;
  r.phase = "eval";
  { MetricsWriter(p).write(r); }
  { MetricsWriter(p).write(r); }
  auto lines = [&] {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string l; std::getline(in, l);) ++n;
    return n;
  };
  EXPECT_EQ(lines(), 2u);
  { MetricsWriter(p, MetricsWriter::Mode::Truncate).write(r); }
  EXPECT_EQ(lines(), 1u);
  expect_error([&] { MetricsWriter(dir_ / "nope" / "m.jsonl"); }, ErrorKind::Io);
}

TEST_F(Metrics, ThetaMatchesStateAndCurveReplays) {
  RunConfig c;
  c.seed = 1;
  c.epochs_initial = 10;
  c.epochs_incremental = 5;
  c.synthetic.samples_per_class = 40;
  const auto split = make_split(c, synthetic_dataset(c));
  const auto p = dir_ / "run.jsonl";
  OwrRunResult run = [&] {
    MetricsWriter w(p);
    auto oracle = make_oracle(c, split);
    return run_owr(c, split, *oracle, &w);
  }();
  std::ifstream in(p);
  std::vector<MetricsRecord> evals;
  MetricsRecord last;
  for (std::string l; std::getline(in, l);) {
    last = parse_metrics_line(l);
    if (last.phase == "eval") evals.push_back(last);
  }
  ASSERT_EQ(evals.size(), run.steps.size() + 1);
  EXPECT_EQ(evals.back().theta, run.state.threshold.theta);
  for (std::size_t i = 0; i < run.steps.size(); ++i) {
    EXPECT_EQ(evals[i + 1].eval->open_world_accuracy, run.steps[i].after.open_world_accuracy);
  }
}

TEST(Config, DefaultsAreThePublishedHyperparameters) {
  const auto c = config_from_json("{}");
  EXPECT_EQ(c.lambda, 1.0);
  EXPECT_EQ(c.w_plus, 1.0);
  EXPECT_EQ(c.w_minus, 3.0);
  EXPECT_EQ(c.memory_capacity, 2000u);
  EXPECT_EQ(c.memory_ratio, 0.4);
  EXPECT_EQ(c.batch_size, 64u);
  EXPECT_EQ(c.epochs_initial, 120u);
  EXPECT_EQ(c.epochs_incremental, 40u);
}

TEST(Config, RoundTripAndOverrides) {
  auto c = config_from_json(R"({"lambda": 0.5, "hidden_layers": [8], "oracle": {"kind": "noisy-web",
      "label_noise_rate": 0.2}, "lr_schedule": "cosine", "count_reset": "phase"})");
  EXPECT_EQ(c.lambda, 0.5);
  EXPECT_EQ(c.hidden_layers, (std::vector<std::size_t>{8}));
  EXPECT_EQ(c.oracle.kind, "noisy-web");
  EXPECT_EQ(c.lr_schedule, LrSchedule::Cosine);
  EXPECT_EQ(c.count_reset, CountReset::Phase);
  EXPECT_EQ(config_to_json(config_from_json(config_to_json(c))), config_to_json(c));
}

TEST(Config, Rejections) {
  expect_error([] { (void)config_from_json(R"({"lamda": 1})"); }, ErrorKind::Config, "lamda");
  expect_error([] { (void)config_from_json(R"({"oracle": {"noise": 1}})"); }, ErrorKind::Config);
  expect_error([] { (void)config_from_json(R"({"lambda": -1})"); }, ErrorKind::Config);
  expect_error([] { (void)config_from_json(R"({"memory_ratio": 2})"); }, ErrorKind::Config);
  expect_error([] { (void)config_from_json(R"({"lambda": "one"})"); }, ErrorKind::Config);
  expect_error([] { (void)config_from_json("[1,2"); }, ErrorKind::Config);
  expect_error([] { (void)load_config("/nonexistent/owr.json"); }, ErrorKind::Config);
}

TEST(Config, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 1), derive_seed(2, 1));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

using Checkpoint = TempDir;

TEST_F(Checkpoint, RoundTripPredictsIdentically) {
  RunConfig c;
  c.seed = 2;
  c.epochs_initial = 10;
  c.epochs_incremental = 5;
  c.synthetic.samples_per_class = 40;
  const auto split = make_split(c, synthetic_dataset(c));
  auto oracle = make_oracle(c, split);
  auto state = train_initial_model(c, split);
  (void)incremental_step(state, *oracle, {Vector::Zero(2), split.incremental_classes.front()},
                         c.incremental_schedule(), 9);

  const auto p = dir_ / "state.json";
  save_checkpoint(state, p);
  const auto loaded = load_checkpoint(p);
  EXPECT_EQ(loaded.known_classes, state.known_classes);
  EXPECT_EQ(loaded.threshold.theta, state.threshold.theta);
  EXPECT_EQ(loaded.threshold.step, state.threshold.step);
  EXPECT_EQ(loaded.incremental_step, state.incremental_step);
  EXPECT_EQ(loaded.memory.size(), state.memory.size());
  ASSERT_TRUE(loaded.snapshot.has_value());

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int i = 0; i < 500; ++i) {
    const Vector x{{u(rng), u(rng)}};
    EXPECT_EQ(predict(loaded, x), predict(state, x));
    EXPECT_EQ(loaded.network.forward(x), state.network.forward(x));
    EXPECT_EQ(loaded.snapshot->forward(x), state.snapshot->forward(x));
  }
  EXPECT_EQ(checkpoint_to_json(loaded), checkpoint_to_json(state));
}

TEST(CheckpointJson, Rejections) {
  expect_error([] { (void)checkpoint_from_json("{"); }, ErrorKind::Data);
  expect_error([] { (void)checkpoint_from_json(R"({"version": 99})"); }, ErrorKind::Data);
  expect_error([] { (void)load_checkpoint("/nonexistent/ckpt.json"); }, ErrorKind::Io);
}

TEST(NetworkJson, RoundTrip) {
  const auto net = EmbeddingNetwork::glorot(3, std::vector<std::size_t>{7, 5}, 4, 11);
  const auto back = network_from_json(network_to_json(net));
  EXPECT_TRUE(back.same_architecture(net));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    EXPECT_EQ(back.layers()[l].weight, net.layers()[l].weight);
    EXPECT_EQ(back.layers()[l].bias, net.layers()[l].bias);
  }
}

}  // namespace
}  // namespace owr
