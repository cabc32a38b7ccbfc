#include "owr/evaluation.hpp"

#include "owr/error.hpp"

namespace owr {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void EvalTally::add(const ClassId& truth, const Prediction& predicted) {
  const bool known = known_.count(truth) != 0;
  bool correct = false;
  if (known) {
    ++known_total_;
    if (predicted.is_unknown()) {
      ++known_rejected_;
    } else if (predicted.label() == truth) {
      correct = true;
      ++known_correct_;
    }
  } else {
    ++unknown_total_;
    if (predicted.is_unknown()) {
      correct = true;
      ++unknown_rejected_;
    }
  }
  auto& c = per_class_[truth];
  ++c.total;
  c.correct += correct ? 1 : 0;
  ++total_;
}

EvalReport EvalTally::report() const {
  if (total_ == 0) fail(ErrorKind::Data, "evaluation set is empty");
  EvalReport r;
  r.closed_world_accuracy = ratio(known_correct_, known_total_);
  r.open_world_accuracy = ratio(known_correct_ + unknown_rejected_, total_);
  r.rejection_rate_unknown = ratio(unknown_rejected_, unknown_total_);
  r.false_rejection_rate_known = ratio(known_rejected_, known_total_);
  for (const auto& [id, c] : per_class_) r.per_class_accuracy.emplace(id, ratio(c.correct, c.total));
  r.known_samples = known_total_;
  r.unknown_samples = unknown_total_;
  return r;
}

}  // namespace owr
