#pragma once

#include <Eigen/Core>

#include <compare>
#include <ostream>
#include <string>
#include <utility>

namespace owr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Class label. Ordered lexicographically; "smallest id" tie-breaks use this order.
class ClassId {
 public:
  ClassId() = default;
  explicit ClassId(std::string name) : name_(std::move(name)) {}

  const std::string& str() const noexcept { return name_; }
  bool empty() const noexcept { return name_.empty(); }

  friend auto operator<=>(const ClassId&, const ClassId&) = default;
  friend bool operator==(const ClassId&, const ClassId&) = default;

  friend std::ostream& operator<<(std::ostream& os, const ClassId& id) { return os << id.name_; }

 private:
  std::string name_;
};

/// One training/evaluation example (x_i, k_i). Inputs are raw, not embedded.
struct LabeledSample {
  Vector input;
  ClassId label;
};

/// An embedded feature paired with its ground-truth class.
struct LabeledFeature {
  ClassId label;
  Vector feature;
};

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

}  // namespace owr
