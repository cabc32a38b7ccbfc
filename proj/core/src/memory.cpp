#include "owr/memory.hpp"

#include "owr/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace owr {

namespace {

bool exemplar_less(const Exemplar& a, const Exemplar& b) {
  if (a.relevance != b.relevance) return a.relevance < b.relevance;
  const auto& x = a.sample.input;
  const auto& y = b.sample.input;
  return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
}

std::vector<const LabeledSample*> flatten(const ExemplarMemory& mem) {
  std::vector<const LabeledSample*> out;
  out.reserve(mem.size());
  for (const auto& [_, list] : mem.per_class()) {
    for (const auto& e : list) out.push_back(&e.sample);
  }
  return out;
}

// First k entries of a partial Fisher-Yates shuffle.
template <typename T>
void partial_shuffle(std::vector<T>& items, std::size_t k, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < k && i + 1 < items.size(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
    std::swap(items[i], items[pick(rng)]);
  }
}

}  // namespace

void BatchSpec::validate() const {
  if (batch_size == 0) fail(ErrorKind::Config, "batch_size must be positive");
  if (!(memory_ratio >= 0.0 && memory_ratio <= 1.0)) fail(ErrorKind::Config, "memory_ratio must lie in [0, 1]");
}

std::size_t BatchSpec::memory_share() const {
  return static_cast<std::size_t>(std::floor(memory_ratio * static_cast<double>(batch_size)));
}

BatchComposition compose_batch(const BatchSpec& spec, std::size_t memory_size, std::size_t new_size) {
  spec.validate();
  if (new_size == 0) return {std::min(spec.batch_size, memory_size), 0};
  const std::size_t from_memory = std::min(spec.memory_share(), memory_size);
  return {from_memory, spec.batch_size - from_memory};
}

double relevance(const PrototypeStore& store, const LabeledSample& sample, const EmbeddingNetwork& net) {
  return store.distance(sample.label, net.forward(sample.input));
}

ExemplarMemory::ExemplarMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) fail(ErrorKind::Config, "memory capacity must be positive");
}

std::size_t ExemplarMemory::size() const {
  std::size_t n = 0;
  for (const auto& [_, list] : per_class_) n += list.size();
  return n;
}

const std::vector<Exemplar>& ExemplarMemory::exemplars(const ClassId& id) const {
  auto it = per_class_.find(id);
  if (it == per_class_.end()) fail(ErrorKind::MissingClass, "class '" + id.str() + "' not in memory");
  return it->second;
}

void ExemplarMemory::admit_class(const ClassId& id, std::vector<Exemplar> exemplars) {
  if (contains(id)) fail(ErrorKind::Protocol, "class '" + id.str() + "' is already in memory");
  for (const auto& e : exemplars) {
    if (e.sample.label != id) fail(ErrorKind::Data, "exemplar label does not match admitted class");
    if (!(e.relevance >= 0.0)) fail(ErrorKind::Numeric, "relevance must be a non-negative distance");
  }
  std::sort(exemplars.begin(), exemplars.end(), exemplar_less);
  per_class_.emplace(id, std::move(exemplars));
}

void ExemplarMemory::prune(std::size_t known_class_count) {
  if (known_class_count == 0) fail(ErrorKind::Protocol, "prune needs at least one known class");
  const std::size_t quota = capacity_ / known_class_count;
  for (auto& [_, list] : per_class_) {
    if (list.size() > quota) list.resize(quota);
  }
  // More classes in memory than declared known: trim the tail classes so the bound always holds.
  std::size_t total = size();
  for (auto it = per_class_.rbegin(); total > capacity_ && it != per_class_.rend(); ++it) {
    const std::size_t drop = std::min(it->second.size(), total - capacity_);
    it->second.resize(it->second.size() - drop);
    total -= drop;
  }
}

void ExemplarMemory::refresh_relevance(const EmbeddingNetwork& net, const PrototypeStore& store) {
  for (auto& [id, list] : per_class_) {
    if (!store.contains(id)) continue;
    for (auto& e : list) e.relevance = relevance(store, e.sample, net);
    std::sort(list.begin(), list.end(), exemplar_less);
  }
}

std::vector<LabeledSample> ExemplarMemory::samples() const {
  std::vector<LabeledSample> out;
  out.reserve(size());
  for (const auto& [_, list] : per_class_) {
    for (const auto& e : list) out.push_back(e.sample);
  }
  return out;
}

std::vector<LabeledSample> sample_batch(const ExemplarMemory& mem, std::span<const LabeledSample> new_data,
                                        const BatchSpec& spec, std::uint64_t seed) {
  if (new_data.empty() && mem.size() == 0) fail(ErrorKind::Data, "no memory and no new data to sample from");
  const auto comp = compose_batch(spec, mem.size(), new_data.size());
  std::mt19937_64 rng(seed);

  std::vector<LabeledSample> batch;
  batch.reserve(comp.from_memory + comp.from_new);

  auto pool = flatten(mem);
  partial_shuffle(pool, comp.from_memory, rng);
  for (std::size_t i = 0; i < comp.from_memory; ++i) batch.push_back(*pool[i]);

  if (new_data.size() >= comp.from_new) {
    std::vector<std::size_t> idx(new_data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    partial_shuffle(idx, comp.from_new, rng);
    for (std::size_t i = 0; i < comp.from_new; ++i) batch.push_back(new_data[idx[i]]);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, new_data.size() - 1);
    for (std::size_t i = 0; i < comp.from_new; ++i) batch.push_back(new_data[pick(rng)]);
  }
  return batch;
}

std::vector<std::vector<LabeledSample>> epoch_batches(const ExemplarMemory& mem,
                                                      std::span<const LabeledSample> new_data,
                                                      const BatchSpec& spec, std::mt19937_64& rng) {
  if (new_data.empty() && mem.size() == 0) fail(ErrorKind::Data, "no memory and no new data to sample from");
  auto pool = flatten(mem);
  std::vector<std::vector<LabeledSample>> batches;

  if (new_data.empty()) {
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t start = 0; start < pool.size(); start += spec.batch_size) {
      const auto end = std::min(pool.size(), start + spec.batch_size);
      std::vector<LabeledSample> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(*pool[i]);
      batches.push_back(std::move(batch));
    }
    return batches;
  }

  const auto comp = compose_batch(spec, pool.size(), new_data.size());
  std::vector<std::size_t> order(new_data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  for (std::size_t start = 0; start < order.size(); start += comp.from_new) {
    const auto end = std::min(order.size(), start + comp.from_new);
    std::vector<LabeledSample> batch;
    batch.reserve(comp.from_memory + (end - start));
    partial_shuffle(pool, comp.from_memory, rng);
    for (std::size_t i = 0; i < comp.from_memory; ++i) batch.push_back(*pool[i]);
    for (std::size_t i = start; i < end; ++i) batch.push_back(new_data[order[i]]);
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace owr
