#pragma once

#include "owr/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace owr {

/// A rejected sample handed to an oracle. hidden_label carries the ground
/// truth in simulations; real oracles must not rely on it.
struct OracleQuery {
  Vector input;
  std::optional<ClassId> hidden_label;
};

struct OracleAnswer {
  ClassId label;
  std::vector<LabeledSample> samples;
};

/// Supplies a label and training data for a sample the model rejected.
class LabelOracle {
 public:
  virtual ~LabelOracle() = default;
  virtual OracleAnswer query(const OracleQuery& q) = 0;
};

/// Returns the true label and up to n_query unused pool samples of that class
/// (n_query = 0: label only). Pool samples are never returned twice.
class GroundTruthOracle : public LabelOracle {
 public:
  GroundTruthOracle(std::span<const LabeledSample> pool, std::size_t n_query);

  OracleAnswer query(const OracleQuery& q) override;

  std::size_t remaining(const ClassId& id) const;
  std::vector<ClassId> pool_classes() const;

 private:
  ClassId resolve_label(const OracleQuery& q) const;

  std::map<ClassId, std::vector<LabeledSample>> pool_;
  std::map<ClassId, std::size_t> cursor_;
  std::size_t n_query_;
};

/// Simulated web retrieval. The returned label is correct (a human verifies
/// it), but each returned sample is mislabeled with probability
/// label_noise_rate (uniformly among the other classes of label_space), and
/// all inputs of one answer share a random offset of norm feature_shift that
/// models the gap between web images and deployment images.
class NoisyWebOracle : public LabelOracle {
 public:
  NoisyWebOracle(std::span<const LabeledSample> pool, std::size_t n_query, double label_noise_rate,
                 double feature_shift, std::vector<ClassId> label_space, std::uint64_t seed);

  OracleAnswer query(const OracleQuery& q) override;

 private:
  GroundTruthOracle inner_;
  double label_noise_rate_;
  double feature_shift_;
  std::vector<ClassId> label_space_;
  std::mt19937_64 rng_;
};

/// Asks a human to confirm the label proposed by another oracle. An empty line
/// or "y" accepts; any other text is taken as the corrected label.
class HumanVerifiedOracle : public LabelOracle {
 public:
  HumanVerifiedOracle(LabelOracle& proposer, std::istream& in, std::ostream& out);

  OracleAnswer query(const OracleQuery& q) override;

 private:
  LabelOracle& proposer_;
  std::istream& in_;
  std::ostream& out_;
};

}  // namespace owr
