#pragma once

#include "owr/embedding.hpp"
#include "owr/prototypes.hpp"
#include "owr/types.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

namespace owr {

/// A stored training sample and its distance to its class mean (lower is more relevant).
struct Exemplar {
  LabeledSample sample;
  double relevance = 0.0;
};

struct BatchSpec {
  std::size_t batch_size = 64;
  double memory_ratio = 0.4;

  void validate() const;
  /// floor(memory_ratio * batch_size)
  std::size_t memory_share() const;
};

struct BatchComposition {
  std::size_t from_memory = 0;
  std::size_t from_new = 0;
};

/// min(floor(ρ b), |mem|) memory samples, the rest from new data. With no new
/// data at all, the batch is filled from memory up to b.
BatchComposition compose_batch(const BatchSpec& spec, std::size_t memory_size, std::size_t new_size);

/// Distance of the embedded sample to its class mean under the current network.
double relevance(const PrototypeStore& store, const LabeledSample& sample, const EmbeddingNetwork& net);

/// Fixed-capacity rehearsal memory. Each class list is kept sorted by
/// ascending relevance distance (ties broken by input values).
class ExemplarMemory {
 public:
  explicit ExemplarMemory(std::size_t capacity = 2000);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const;
  std::size_t class_count() const { return per_class_.size(); }
  bool contains(const ClassId& id) const { return per_class_.count(id) != 0; }
  const std::vector<Exemplar>& exemplars(const ClassId& id) const;
  const std::map<ClassId, std::vector<Exemplar>>& per_class() const { return per_class_; }

  /// Adds a new class. May exceed the per-class quota until the next prune().
  void admit_class(const ClassId& id, std::vector<Exemplar> exemplars);

  /// Keeps the floor(capacity / known_class_count) most relevant exemplars of each class.
  void prune(std::size_t known_class_count);

  /// Recomputes every relevance with the current network and means, then re-sorts.
  void refresh_relevance(const EmbeddingNetwork& net, const PrototypeStore& store);

  /// All stored samples, ordered by class then relevance.
  std::vector<LabeledSample> samples() const;

 private:
  std::size_t capacity_;
  std::map<ClassId, std::vector<Exemplar>> per_class_;
};

/// One rehearsal batch: min(floor(ρ b), |mem|) memory samples drawn without
/// replacement, the remainder drawn from new_data (with replacement only when
/// new_data is smaller than the remainder). Deterministic for a given seed.
std::vector<LabeledSample> sample_batch(const ExemplarMemory& mem, std::span<const LabeledSample> new_data,
                                        const BatchSpec& spec, std::uint64_t seed);

/// One epoch over new_data: it is shuffled and cut into chunks of the new-data
/// share, and each chunk is topped up with fresh memory draws. With no new data
/// the epoch is one shuffled pass over memory.
std::vector<std::vector<LabeledSample>> epoch_batches(const ExemplarMemory& mem,
                                                      std::span<const LabeledSample> new_data,
                                                      const BatchSpec& spec, std::mt19937_64& rng);

}  // namespace owr
