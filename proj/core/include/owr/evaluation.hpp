#pragma once

#include "owr/rejection.hpp"
#include "owr/types.hpp"

#include <cstddef>
#include <map>
#include <set>

namespace owr {

struct EvalReport {
  double closed_world_accuracy = 0.0;       ///< over known-class samples; a rejection is an error
  double open_world_accuracy = 0.0;         ///< unknown samples are correct iff rejected
  double rejection_rate_unknown = 0.0;
  double false_rejection_rate_known = 0.0;
  std::map<ClassId, double> per_class_accuracy;  ///< open-world correctness per true class
  std::size_t known_samples = 0;
  std::size_t unknown_samples = 0;
};

/// Accumulates predictions against ground truth relative to a known-class set.
class EvalTally {
 public:
  explicit EvalTally(std::set<ClassId> known) : known_(std::move(known)) {}

  void add(const ClassId& truth, const Prediction& predicted);
  std::size_t count() const { return total_; }
  /// Throws a data error when nothing was added.
  EvalReport report() const;

 private:
  struct ClassCount {
    std::size_t correct = 0;
    std::size_t total = 0;
  };

  std::set<ClassId> known_;
  std::map<ClassId, ClassCount> per_class_;
  std::size_t total_ = 0;
  std::size_t known_total_ = 0;
  std::size_t known_correct_ = 0;
  std::size_t known_rejected_ = 0;
  std::size_t unknown_total_ = 0;
  std::size_t unknown_rejected_ = 0;
};

}  // namespace owr
