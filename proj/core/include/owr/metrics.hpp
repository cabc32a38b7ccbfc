#pragma once

#include "owr/evaluation.hpp"
#include "owr/losses.hpp"

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

namespace owr {

/// One line of the JSON-lines metrics log.
struct MetricsRecord {
  std::string phase;  ///< "initial", "incremental", "eval", ...
  std::size_t step = 0;
  std::optional<std::size_t> epoch;
  std::optional<LossBreakdown> loss;
  double theta = 0.0;
  std::optional<EvalReport> eval;
  std::optional<ClassId> added_class;
};

std::string to_json_line(const MetricsRecord& record);
MetricsRecord parse_metrics_line(const std::string& line);

class MetricsWriter {
 public:
  enum class Mode { Append, Truncate };

  explicit MetricsWriter(const std::filesystem::path& path, Mode mode = Mode::Append);

  void write(const MetricsRecord& record);
  std::size_t lines_written() const { return lines_; }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  std::size_t lines_ = 0;
};

}  // namespace owr
