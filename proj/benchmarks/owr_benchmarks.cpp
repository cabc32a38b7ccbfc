#include "owr/baselines.hpp"
#include "owr/embedding.hpp"
#include "owr/losses.hpp"
#include "owr/memory.hpp"
#include "owr/rejection.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace owr;

Vector random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
  return v;
}

EmbeddingNetwork make_net(std::size_t hidden) {
  return EmbeddingNetwork::glorot(2, std::vector<std::size_t>{hidden, hidden / 2}, 16, 1);
}

PrototypeStore make_store(std::mt19937_64& rng, std::size_t classes) {
  PrototypeStore store(16);
  for (std::size_t k = 0; k < classes; ++k) store.set({ClassId{"c" + std::to_string(k)}, random_vector(rng, 16), 1});
  return store;
}

void BM_Forward(benchmark::State& state) {
  const auto net = make_net(static_cast<std::size_t>(state.range(0)));
  std::mt19937_64 rng(1);
  const Vector x = random_vector(rng, 2);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(128)->Arg(512);

void BM_ForwardBackward(benchmark::State& state) {
  const auto net = make_net(static_cast<std::size_t>(state.range(0)));
  std::mt19937_64 rng(2);
  const Vector x = random_vector(rng, 2), g = random_vector(rng, 16);
  for (auto _ : state) {
    const auto cache = net.forward_with_cache(x);
    benchmark::DoNotOptimize(net.backward(cache, g));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(128)->Arg(512);

void BM_TotalLossBatch(benchmark::State& state) {
  const auto net = make_net(128);
  const auto teacher = snapshot(net);
  std::mt19937_64 rng(3);
  const auto store = make_store(rng, static_cast<std::size_t>(state.range(0)));
  std::vector<LabeledSample> batch;
  for (int i = 0; i < 64; ++i) batch.push_back({random_vector(rng, 2), ClassId{"c" + std::to_string(i % state.range(0))}});
  for (auto _ : state) benchmark::DoNotOptimize(total_loss(batch, net, &teacher, store, 1.0));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_TotalLossBatch)->Arg(6)->Arg(50)->Arg(100);

void BM_PredictDeepNno(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const auto store = make_store(rng, static_cast<std::size_t>(state.range(0)));
  const ThresholdState ts{0.3, 10};
  const Vector f = random_vector(rng, 16);
  for (auto _ : state) benchmark::DoNotOptimize(predict_deepnno(store, ts, f));
}
BENCHMARK(BM_PredictDeepNno)->Arg(6)->Arg(100);

void BM_PredictNno(benchmark::State& state) {
  std::mt19937_64 rng(5);
  const auto store = make_store(rng, static_cast<std::size_t>(state.range(0)));
  const auto metric = LinearMetric::identity(16, 16);
  const Vector f = random_vector(rng, 16);
  for (auto _ : state) benchmark::DoNotOptimize(nno_predict({3.0, 1.0}, metric, store, f));
}
BENCHMARK(BM_PredictNno)->Arg(6)->Arg(100);

void BM_Prune(benchmark::State& state) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<Exemplar>> classes(20);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    for (int i = 0; i < 400; ++i) classes[k].push_back({{Vector{{u(rng)}}, ClassId{"c" + std::to_string(k)}}, u(rng)});
  }
  for (auto _ : state) {
    state.PauseTiming();
    ExemplarMemory mem(2000);
    for (std::size_t k = 0; k < classes.size(); ++k) mem.admit_class(ClassId{"c" + std::to_string(k)}, classes[k]);
    state.ResumeTiming();
    mem.prune(classes.size());
    benchmark::DoNotOptimize(mem.size());
  }
}
BENCHMARK(BM_Prune);

}  // namespace

BENCHMARK_MAIN();
