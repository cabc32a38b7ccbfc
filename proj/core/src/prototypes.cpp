#include "owr/prototypes.hpp"

#include "owr/error.hpp"

#include <cmath>
#include <string>

namespace owr {

double score_from_distance(double distance) { return std::exp(-0.5 * distance); }

PrototypeStore::PrototypeStore(std::size_t embedding_dim) : dim_(embedding_dim) {
  if (dim_ == 0) fail(ErrorKind::Shape, "embedding dimension must be positive");
}

const ClassPrototype& PrototypeStore::at(const ClassId& id) const {
  auto it = prototypes_.find(id);
  if (it == prototypes_.end()) fail(ErrorKind::MissingClass, "unknown class id '" + id.str() + "'");
  return it->second;
}

std::vector<ClassId> PrototypeStore::classes() const {
  std::vector<ClassId> out;
  out.reserve(prototypes_.size());
  for (const auto& [id, _] : prototypes_) out.push_back(id);
  return out;
}

void PrototypeStore::check_dim(const Vector& f) const {
  if (static_cast<std::size_t>(f.size()) != dim_) {
    fail(ErrorKind::Shape, "feature has length " + std::to_string(f.size()) + ", store expects " +
                               std::to_string(dim_));
  }
}

double PrototypeStore::distance(const ClassId& id, const Vector& f) const {
  const auto& proto = at(id);
  check_dim(f);
  return (f - proto.mean).norm();
}

double PrototypeStore::probability_score(const ClassId& id, const Vector& f) const {
  return score_from_distance(distance(id, f));
}

std::map<ClassId, double> PrototypeStore::scores_all(const Vector& f) const {
  if (prototypes_.empty()) fail(ErrorKind::EmptyModel, "no known classes to score against");
  check_dim(f);
  std::map<ClassId, double> out;
  for (const auto& [id, proto] : prototypes_) out.emplace(id, score_from_distance((f - proto.mean).norm()));
  return out;
}

void PrototypeStore::update_means(std::span<const LabeledFeature> batch) {
  struct Accum {
    Vector sum;
    std::uint64_t count = 0;
  };
  std::map<ClassId, Accum> per_class;
  for (const auto& item : batch) {
    check_dim(item.feature);
    if (!item.feature.allFinite()) {
      fail(ErrorKind::Numeric, "non-finite feature for class '" + item.label.str() + "'");
    }
    auto [it, inserted] = per_class.try_emplace(item.label);
    if (inserted) it->second.sum = Vector::Zero(static_cast<Eigen::Index>(dim_));
    it->second.sum += item.feature;
    ++it->second.count;
  }

  for (auto& [id, acc] : per_class) {
    const Vector batch_mean = acc.sum / static_cast<double>(acc.count);
    auto it = prototypes_.find(id);
    if (it == prototypes_.end()) {
      prototypes_.emplace(id, ClassPrototype{id, batch_mean, acc.count});
      continue;
    }
    auto& proto = it->second;
    const auto n = static_cast<double>(proto.count);
    const auto nb = static_cast<double>(acc.count);
    proto.mean = (n * proto.mean + nb * batch_mean) / (n + nb);
    proto.count += acc.count;
  }
}

void PrototypeStore::set(ClassPrototype prototype) {
  check_dim(prototype.mean);
  if (!prototype.mean.allFinite()) fail(ErrorKind::Numeric, "non-finite prototype mean");
  auto id = prototype.id;
  prototypes_.insert_or_assign(id, std::move(prototype));
}

void PrototypeStore::reset_counts() {
  for (auto& [_, proto] : prototypes_) proto.count = 0;
}

}  // namespace owr
