#include "owr/oracle.hpp"

#include "owr/error.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace owr {

GroundTruthOracle::GroundTruthOracle(std::span<const LabeledSample> pool, std::size_t n_query)
    : n_query_(n_query) {
  for (const auto& s : pool) pool_[s.label].push_back(s);
  for (const auto& [id, _] : pool_) cursor_[id] = 0;
}

std::size_t GroundTruthOracle::remaining(const ClassId& id) const {
  auto it = pool_.find(id);
  return it == pool_.end() ? 0 : it->second.size() - cursor_.at(id);
}

std::vector<ClassId> GroundTruthOracle::pool_classes() const {
  std::vector<ClassId> out;
  for (const auto& [id, _] : pool_) out.push_back(id);
  return out;
}

ClassId GroundTruthOracle::resolve_label(const OracleQuery& q) const {
  if (q.hidden_label) return *q.hidden_label;
  // No ground truth attached: label of the nearest pool sample.
  const ClassId* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& [id, samples] : pool_) {
    for (const auto& s : samples) {
      if (s.input.size() != q.input.size()) continue;
      const double d = (s.input - q.input).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = &id;
      }
    }
  }
  if (best == nullptr) fail(ErrorKind::Protocol, "oracle cannot resolve a label for the query");
  return *best;
}

OracleAnswer GroundTruthOracle::query(const OracleQuery& q) {
  OracleAnswer answer;
  answer.label = resolve_label(q);
  if (n_query_ == 0) return answer;

  auto it = pool_.find(answer.label);
  const std::size_t left = it == pool_.end() ? 0 : it->second.size() - cursor_[answer.label];
  if (left == 0) fail(ErrorKind::Protocol, "oracle pool for class '" + answer.label.str() + "' is exhausted");

  const std::size_t take = std::min(left, n_query_);
  auto& cur = cursor_[answer.label];
  answer.samples.assign(it->second.begin() + static_cast<std::ptrdiff_t>(cur),
                        it->second.begin() + static_cast<std::ptrdiff_t>(cur + take));
  cur += take;
  return answer;
}

NoisyWebOracle::NoisyWebOracle(std::span<const LabeledSample> pool, std::size_t n_query, double label_noise_rate,
                               double feature_shift, std::vector<ClassId> label_space, std::uint64_t seed)
    : inner_(pool, n_query),
      label_noise_rate_(label_noise_rate),
      feature_shift_(feature_shift),
      label_space_(std::move(label_space)),
      rng_(seed) {
  if (!(label_noise_rate >= 0.0 && label_noise_rate <= 1.0)) {
    fail(ErrorKind::Config, "label_noise_rate must lie in [0, 1]");
  }
  if (!(feature_shift >= 0.0) || !std::isfinite(feature_shift)) {
    fail(ErrorKind::Config, "feature_shift must be finite and non-negative");
  }
}

OracleAnswer NoisyWebOracle::query(const OracleQuery& q) {
  auto answer = inner_.query(q);
  if (answer.samples.empty()) return answer;

  std::vector<ClassId> others;
  for (const auto& id : label_space_) {
    if (id != answer.label) others.push_back(id);
  }

  Vector offset = Vector::Zero(answer.samples.front().input.size());
  if (feature_shift_ > 0.0) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index j = 0; j < offset.size(); ++j) offset(j) = gauss(rng_);
    const double n = offset.norm();
    if (n > 0.0) offset *= feature_shift_ / n;
  }

  std::bernoulli_distribution flip(label_noise_rate_);
  for (auto& s : answer.samples) {
    s.input += offset;
    if (!others.empty() && flip(rng_)) {
      std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
      s.label = others[pick(rng_)];
    }
  }
  return answer;
}

HumanVerifiedOracle::HumanVerifiedOracle(LabelOracle& proposer, std::istream& in, std::ostream& out)
    : proposer_(proposer), in_(in), out_(out) {}

OracleAnswer HumanVerifiedOracle::query(const OracleQuery& q) {
  auto answer = proposer_.query(q);
  out_ << "Unknown object detected. Proposed label '" << answer.label << "' (" << answer.samples.size()
       << " samples). Accept? [Y/label]: " << std::flush;
  std::string line;
  if (!std::getline(in_, line)) return answer;
  const auto first = line.find_first_not_of(" \t\r");
  if (first == std::string::npos) return answer;
  line = line.substr(first, line.find_last_not_of(" \t\r") - first + 1);
  if (line == "y" || line == "Y" || line == "yes") return answer;

  const ClassId corrected(line);
  for (auto& s : answer.samples) {
    if (s.label == answer.label) s.label = corrected;
  }
  answer.label = corrected;
  return answer;
}

}  // namespace owr
