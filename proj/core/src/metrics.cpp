#include "owr/metrics.hpp"

#include "owr/error.hpp"

#include <nlohmann/json.hpp>

namespace owr {

using nlohmann::json;

namespace {

json eval_to_json(const EvalReport& r) {
  json per_class = json::object();
  for (const auto& [id, acc] : r.per_class_accuracy) per_class[id.str()] = acc;
  return json{{"closed_world_accuracy", r.closed_world_accuracy},
              {"open_world_accuracy", r.open_world_accuracy},
              {"rejection_rate_unknown", r.rejection_rate_unknown},
              {"false_rejection_rate_known", r.false_rejection_rate_known},
              {"known_samples", r.known_samples},
              {"unknown_samples", r.unknown_samples},
              {"per_class_accuracy", per_class}};
}

EvalReport eval_from_json(const json& j) {
  EvalReport r;
  r.closed_world_accuracy = j.at("closed_world_accuracy").get<double>();
  r.open_world_accuracy = j.at("open_world_accuracy").get<double>();
  r.rejection_rate_unknown = j.at("rejection_rate_unknown").get<double>();
  r.false_rejection_rate_known = j.at("false_rejection_rate_known").get<double>();
  r.known_samples = j.at("known_samples").get<std::size_t>();
  r.unknown_samples = j.at("unknown_samples").get<std::size_t>();
  for (const auto& [k, v] : j.at("per_class_accuracy").items()) r.per_class_accuracy.emplace(ClassId(k), v.get<double>());
  return r;
}

}  // namespace

std::string to_json_line(const MetricsRecord& record) {
  json j;
  j["phase"] = record.phase;
  j["step"] = record.step;
  j["epoch"] = record.epoch ? json(*record.epoch) : json(nullptr);
  if (record.loss) {
    j["loss"] = json{{"classification", record.loss->classification},
                     {"distillation", record.loss->distillation},
                     {"total", record.loss->total},
                     {"lambda", record.loss->lambda}};
  } else {
    j["loss"] = nullptr;
  }
  j["theta"] = record.theta;
  j["accuracies"] = record.eval ? eval_to_json(*record.eval) : json(nullptr);
  if (record.added_class) j["added_class"] = record.added_class->str();
  return j.dump();
}

MetricsRecord parse_metrics_line(const std::string& line) {
  try {
    const auto j = json::parse(line);
    MetricsRecord r;
    r.phase = j.at("phase").get<std::string>();
    r.step = j.at("step").get<std::size_t>();
    if (!j.at("epoch").is_null()) r.epoch = j.at("epoch").get<std::size_t>();
    if (!j.at("loss").is_null()) {
      const auto& l = j.at("loss");
      r.loss = LossBreakdown{l.at("classification").get<double>(), l.at("distillation").get<double>(),
                             l.at("total").get<double>(), l.at("lambda").get<double>()};
    }
    r.theta = j.at("theta").get<double>();
    if (!j.at("accuracies").is_null()) r.eval = eval_from_json(j.at("accuracies"));
    if (j.contains("added_class")) r.added_class = ClassId(j.at("added_class").get<std::string>());
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("malformed metrics line: ") + e.what());
  }
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, Mode mode)
    : out_(path, mode == Mode::Append ? std::ios::app : std::ios::trunc), path_(path) {
  if (!out_) fail(ErrorKind::Io, "cannot open metrics file '" + path.string() + "'");
}

void MetricsWriter::write(const MetricsRecord& record) {
  out_ << to_json_line(record) << '\n';
  out_.flush();
  if (!out_) fail(ErrorKind::Io, "failed writing metrics to '" + path_.string() + "'");
  ++lines_;
}

}  // namespace owr
