#pragma once

#include "owr/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

namespace owr {

/// Labeled samples sharing one input dimensionality.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<LabeledSample> samples);

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::size_t dim() const { return dim_; }
  const std::vector<LabeledSample>& samples() const { return samples_; }
  /// Distinct labels, ascending.
  std::vector<ClassId> class_ids() const;
  std::vector<LabeledSample> of_class(const ClassId& id) const;

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  std::vector<LabeledSample> samples_;
  std::size_t dim_ = 0;
};

/// Reads `label,f0,...,f{d-1}` with a header row. Errors name the 1-based line.
Dataset load_csv(const std::filesystem::path& path);
/// Writes shortest round-trip decimal representations; load_csv(write) == original.
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

struct SyntheticSpec {
  std::size_t num_classes = 6;
  std::size_t samples_per_class = 200;
  std::size_t dim = 2;
  double cluster_sigma = 0.2;
  double min_center_separation = 2.0;
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  Dataset data;
  std::map<ClassId, Vector> centers;
};

/// Isotropic Gaussian clusters whose centers are pairwise >= min_center_separation apart.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

/// Class partition for the open-world protocol plus per-class train/test splits.
struct OpenWorldSplit {
  std::vector<ClassId> initial_classes;      ///< K_0
  std::vector<ClassId> incremental_classes;  ///< added one per step, in this order
  std::vector<ClassId> unknown_classes;      ///< never become known
  std::map<ClassId, std::vector<LabeledSample>> train;
  std::map<ClassId, std::vector<LabeledSample>> test;

  std::vector<LabeledSample> initial_train() const;
  std::vector<LabeledSample> test_samples() const;
  std::vector<LabeledSample> test_of(const ClassId& id) const;
};

OpenWorldSplit split_open_world(const Dataset& dataset, std::size_t num_known_initial,
                                std::size_t num_known_total, std::uint64_t seed, double test_fraction = 0.3);

}  // namespace owr
