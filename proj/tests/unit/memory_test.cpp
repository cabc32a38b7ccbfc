#include "owr/error.hpp"
#include "owr/memory.hpp"
#include "support/reference.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

namespace owr {
namespace {

Exemplar exemplar(const std::string& label, double relevance, double x = 0.0) {
  return {{Vector{{x, relevance}}, ClassId{label}}, relevance};
}

std::vector<double> relevances(const ExemplarMemory& mem, const std::string& label) {
  std::vector<double> out;
  for (const auto& e : mem.exemplars(ClassId{label})) out.push_back(e.relevance);
  return out;
}

TEST(ComposeBatch, DefaultSplit) {
  const auto c = compose_batch({64, 0.4}, 2000, 500);
  EXPECT_EQ(c.from_memory, 25u);
  EXPECT_EQ(c.from_new, 39u);
}

TEST(ComposeBatch, TenSamples) {
  const auto c = compose_batch({10, 0.4}, 100, 100);
  EXPECT_EQ(c.from_memory, 4u);
  EXPECT_EQ(c.from_new, 6u);
}

TEST(ComposeBatch, Fallbacks) {
  EXPECT_EQ(compose_batch({10, 0.4}, 0, 100).from_new, 10u);
  EXPECT_EQ(compose_batch({10, 0.0}, 100, 100).from_memory, 0u);
  EXPECT_EQ(compose_batch({10, 0.4}, 2, 100).from_memory, 2u);
  EXPECT_EQ(compose_batch({10, 0.4}, 2, 100).from_new, 8u);
  EXPECT_EQ(compose_batch({10, 0.4}, 7, 0).from_memory, 7u);
}

TEST(ComposeBatch, GridMatchesClosedForm) {
  for (std::size_t b : {1u, 2u, 7u, 10u, 32u, 64u, 100u}) {
    for (double rho : {0.0, 0.1, 0.25, 0.4, 0.5, 0.99, 1.0}) {
      for (std::size_t mem : {0u, 1u, 3u, 25u, 2000u}) {
        const BatchSpec spec{b, rho};
        const auto c = compose_batch(spec, mem, 1000);
        const auto share = static_cast<std::size_t>(std::floor(rho * static_cast<double>(b)));
        EXPECT_EQ(c.from_memory, std::min(share, mem)) << b << " " << rho << " " << mem;
        EXPECT_EQ(c.from_memory + c.from_new, b);
      }
    }
  }
}

TEST(BatchSpec, Validation) {
  EXPECT_THROW(BatchSpec({0, 0.4}).validate(), Error);
  EXPECT_THROW(BatchSpec({10, 1.5}).validate(), Error);
  EXPECT_THROW(BatchSpec({10, -0.1}).validate(), Error);
}

TEST(SampleBatch, CompositionAndDeterminism) {
  ExemplarMemory mem(100);
  std::vector<Exemplar> ex;
  for (int i = 0; i < 20; ++i) ex.push_back(exemplar("old", 0.01 * i, i));
  mem.admit_class(ClassId{"old"}, ex);
  std::vector<LabeledSample> fresh;
  for (int i = 0; i < 50; ++i) fresh.push_back({Vector{{100.0 + i, 0.0}}, ClassId{"new"}});

  const auto a = sample_batch(mem, fresh, {10, 0.4}, 7);
  const auto b = sample_batch(mem, fresh, {10, 0.4}, 7);
  ASSERT_EQ(a.size(), 10u);
  EXPECT_EQ(std::count_if(a.begin(), a.end(), [](const auto& s) { return s.label == ClassId{"old"}; }), 4);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].input, b[i].input);

  std::vector<double> drawn;
  for (const auto& s : a) {
    if (s.label == ClassId{"old"}) drawn.push_back(s.input[0]);
  }
  std::sort(drawn.begin(), drawn.end());
  EXPECT_EQ(std::adjacent_find(drawn.begin(), drawn.end()), drawn.end());
}

TEST(SampleBatch, SmallNewDataIsReused) {
  ExemplarMemory mem(10);
  std::vector<LabeledSample> fresh{{Vector{{1.0, 1.0}}, ClassId{"n"}}};
  const auto batch = sample_batch(mem, fresh, {5, 0.4}, 1);
  EXPECT_EQ(batch.size(), 5u);
}

TEST(SampleBatch, BothEmptyIsDataError) {
  ExemplarMemory mem(10);
  try {
    (void)sample_batch(mem, {}, {5, 0.4}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Data);
  }
}

TEST(EpochBatches, CoversNewDataOnceWithRehearsal) {
  ExemplarMemory mem(100);
  std::vector<Exemplar> ex;
  for (int i = 0; i < 30; ++i) ex.push_back(exemplar("old", 0.01 * i, i));
  mem.admit_class(ClassId{"old"}, ex);
  std::vector<LabeledSample> fresh;
  for (int i = 0; i < 45; ++i) fresh.push_back({Vector{{100.0 + i, 0.0}}, ClassId{"new"}});

  std::mt19937_64 rng(3);
  const auto batches = epoch_batches(mem, fresh, {10, 0.4}, rng);
  std::vector<double> seen;
  for (const auto& b : batches) {
    std::size_t from_mem = 0;
    for (const auto& s : b) {
      if (s.label == ClassId{"new"}) seen.push_back(s.input[0]);
      else ++from_mem;
    }
    EXPECT_EQ(from_mem, 4u);
  }
  std::sort(seen.begin(), seen.end());
  ASSERT_EQ(seen.size(), 45u);
  for (int i = 0; i < 45; ++i) EXPECT_EQ(seen[static_cast<std::size_t>(i)], 100.0 + i);
}

TEST(Memory, AdmitSortsByRelevance) {
  ExemplarMemory mem(10);
  mem.admit_class(ClassId{"A"}, {exemplar("A", 0.9), exemplar("A", 0.1), exemplar("A", 0.5)});
  EXPECT_EQ(relevances(mem, "A"), (std::vector<double>{0.1, 0.5, 0.9}));
  mem.admit_class(ClassId{"B"}, {});
  EXPECT_TRUE(mem.contains(ClassId{"B"}));
  EXPECT_TRUE(mem.exemplars(ClassId{"B"}).empty());
}

TEST(Memory, AdmitErrors) {
  ExemplarMemory mem(10);
  mem.admit_class(ClassId{"A"}, {exemplar("A", 0.1)});
  EXPECT_THROW(mem.admit_class(ClassId{"A"}, {}), Error);
  EXPECT_THROW(mem.admit_class(ClassId{"B"}, {exemplar("A", 0.1)}), Error);
  EXPECT_THROW(ExemplarMemory(0), Error);
  EXPECT_THROW(mem.prune(0), Error);
}

TEST(Memory, InsertionOrderIrrelevant) {
  std::mt19937_64 rng(9);
  std::vector<Exemplar> ex;
  for (int i = 0; i < 30; ++i) ex.push_back(exemplar("A", std::uniform_real_distribution<double>(0, 1)(rng), i));
  auto shuffled = ex;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  ExemplarMemory a(100), b(100);
  a.admit_class(ClassId{"A"}, ex);
  b.admit_class(ClassId{"A"}, shuffled);
  EXPECT_EQ(relevances(a, "A"), relevances(b, "A"));
}

TEST(Prune, CapacitySixExample) {
  ExemplarMemory mem(6);
  mem.admit_class(ClassId{"A"}, {exemplar("A", 0.9), exemplar("A", 0.1), exemplar("A", 0.5)});
  mem.admit_class(ClassId{"B"}, {exemplar("B", 0.2)});
  mem.admit_class(ClassId{"C"}, {exemplar("C", 0.3), exemplar("C", 0.4)});
  mem.prune(3);
  EXPECT_EQ(relevances(mem, "A"), (std::vector<double>{0.1, 0.5}));
  EXPECT_EQ(relevances(mem, "B"), (std::vector<double>{0.2}));
  EXPECT_EQ(relevances(mem, "C"), (std::vector<double>{0.3, 0.4}));
}

TEST(Prune, MatchesSortOracleAndIsIdempotent) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t capacity = 1 + rng() % 60;
    const std::size_t classes = 1 + rng() % 8;
    ExemplarMemory mem(capacity);
    std::map<std::string, std::vector<double>> all;
    for (std::size_t k = 0; k < classes; ++k) {
      const std::string label = "c" + std::to_string(k);
      std::vector<Exemplar> ex;
      const std::size_t n = rng() % 40;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = u(rng);
        ex.push_back(exemplar(label, r, static_cast<double>(i)));
        all[label].push_back(r);
      }
      std::shuffle(ex.begin(), ex.end(), rng);
      mem.admit_class(ClassId{label}, std::move(ex));
    }
    mem.prune(classes);
    EXPECT_LE(mem.size(), capacity);

    const std::size_t quota = capacity / classes;
    for (auto& [label, values] : all) {
      std::sort(values.begin(), values.end());
      values.resize(std::min(values.size(), quota));
      EXPECT_EQ(relevances(mem, label), values) << "trial " << trial << " class " << label;
    }
    const auto before = mem.samples();
    mem.prune(classes);
    const auto after = mem.samples();
    ASSERT_EQ(before.size(), after.size());
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i].input, after[i].input);
  }
}

TEST(Prune, NeverDropsAClassWhileCapacityAllows) {
  ExemplarMemory mem(4);
  for (const char* c : {"A", "B", "C", "D"}) {
    mem.admit_class(ClassId{c}, {exemplar(c, 0.1), exemplar(c, 0.2), exemplar(c, 0.3)});
  }
  mem.prune(4);
  for (const char* c : {"A", "B", "C", "D"}) EXPECT_EQ(mem.exemplars(ClassId{c}).size(), 1u);
}

TEST(Relevance, RefreshUsesCurrentMeans) {
  const EmbeddingNetwork net({DenseLayer{Matrix::Identity(2, 2), Vector::Zero(2), Activation::Identity}});
  PrototypeStore store(2);
  store.set({ClassId{"A"}, Vector{{0.0, 0.0}}, 1});
  ExemplarMemory mem(10);
  mem.admit_class(ClassId{"A"}, {{{Vector{{3.0, 4.0}}, ClassId{"A"}}, 0.0}, {{Vector{{1.0, 0.0}}, ClassId{"A"}}, 9.0}});
  mem.refresh_relevance(net, store);
  EXPECT_EQ(relevances(mem, "A"), (std::vector<double>{1.0, 5.0}));
}

}  // namespace
}  // namespace owr
