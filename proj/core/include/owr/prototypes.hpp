#pragma once

#include "owr/types.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace owr {

/// Running class mean μ_k and the number of features n_k absorbed into it.
struct ClassPrototype {
  ClassId id;
  Vector mean;
  std::uint64_t count = 0;
};

/// exp(-d/2): the DeepNNO class score for a feature at distance d from a mean.
double score_from_distance(double distance);

/// Class prototypes keyed by class id. Keys are the known-class set.
class PrototypeStore {
 public:
  using Map = std::map<ClassId, ClassPrototype>;

  explicit PrototypeStore(std::size_t embedding_dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return prototypes_.size(); }
  bool empty() const { return prototypes_.empty(); }
  bool contains(const ClassId& id) const { return prototypes_.count(id) != 0; }

  const ClassPrototype& at(const ClassId& id) const;
  std::vector<ClassId> classes() const;

  Map::const_iterator begin() const { return prototypes_.begin(); }
  Map::const_iterator end() const { return prototypes_.end(); }

  /// ||f - μ_k||
  double distance(const ClassId& id, const Vector& f) const;
  /// exp(-||f - μ_k|| / 2), never clamped.
  double probability_score(const ClassId& id, const Vector& f) const;
  std::map<ClassId, double> scores_all(const Vector& f) const;

  /// Weighted running-mean update. For every class in the batch:
  ///   μ_k <- (n_k μ_k + n_{k,B} μ_k^B) / (n_k + n_{k,B}),  n_k <- n_k + n_{k,B}.
  /// Unseen classes enter with n_k = 0, so their mean is the batch mean.
  void update_means(std::span<const LabeledFeature> batch);

  /// Inserts or replaces a prototype verbatim (checkpoint loading, baselines).
  void set(ClassPrototype prototype);

  /// Zeroes every n_k while keeping the means; the next update then replaces
  /// each batch-represented mean with its batch mean.
  void reset_counts();

 private:
  void check_dim(const Vector& f) const;

  std::size_t dim_;
  Map prototypes_;
};

}  // namespace owr
