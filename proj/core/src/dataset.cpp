#include "owr/dataset.hpp"

#include "owr/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>

namespace owr {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Dataset::Dataset(std::vector<LabeledSample> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) return;
  dim_ = static_cast<std::size_t>(samples_.front().input.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (static_cast<std::size_t>(samples_[i].input.size()) != dim_) {
      fail(ErrorKind::Data, "sample " + std::to_string(i) + " has inconsistent dimension");
    }
    if (!samples_[i].input.allFinite()) fail(ErrorKind::Data, "sample " + std::to_string(i) + " is not finite");
  }
}

std::vector<ClassId> Dataset::class_ids() const {
  std::set<ClassId> ids;
  for (const auto& s : samples_) ids.insert(s.label);
  return {ids.begin(), ids.end()};
}

std::vector<LabeledSample> Dataset::of_class(const ClassId& id) const {
  std::vector<LabeledSample> out;
  for (const auto& s : samples_) {
    if (s.label == id) out.push_back(s);
  }
  return out;
}

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.dim_ != b.dim_ || a.samples_.size() != b.samples_.size()) return false;
  for (std::size_t i = 0; i < a.samples_.size(); ++i) {
    if (a.samples_[i].label != b.samples_[i].label || a.samples_[i].input != b.samples_[i].input) return false;
  }
  return true;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open dataset '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Data, path.string() + ": missing header");
  const auto header = split_fields(trim(line));
  if (header.size() < 2 || trim(header[0]) != "label") {
    fail(ErrorKind::Data, path.string() + ":1: header must be label,f0,f1,...");
  }
  const std::size_t dim = header.size() - 1;

  std::vector<LabeledSample> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != dim + 1) {
      fail(ErrorKind::Data, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                std::to_string(dim + 1) + " fields, found " + std::to_string(fields.size()));
    }
    LabeledSample s;
    s.label = ClassId(trim(fields[0]));
    if (s.label.empty()) fail(ErrorKind::Data, path.string() + ":" + std::to_string(line_no) + ": empty label");
    s.input.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) {
      double v = 0.0;
      const auto text = trim(fields[j + 1]);
      if (!parse_double(text, v)) {
        fail(ErrorKind::Data, path.string() + ":" + std::to_string(line_no) + ": '" + text +
                                  "' is not a finite number");
      }
      s.input(static_cast<Eigen::Index>(j)) = v;
    }
    samples.push_back(std::move(s));
  }
  if (samples.empty()) fail(ErrorKind::Data, path.string() + ": dataset has no rows");
  return Dataset(std::move(samples));
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write dataset '" + path.string() + "'");
  out << "label";
  for (std::size_t j = 0; j < dataset.dim(); ++j) out << ",f" << j;
  out << '\n';
  for (const auto& s : dataset.samples()) {
    out << s.label.str();
    for (Eigen::Index j = 0; j < s.input.size(); ++j) out << ',' << format_double(s.input(j));
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes == 0 || spec.samples_per_class == 0 || spec.dim == 0) {
    fail(ErrorKind::Config, "synthetic dataset needs positive class count, samples and dim");
  }
  if (!(spec.cluster_sigma > 0.0)) fail(ErrorKind::Config, "cluster_sigma must be positive");
  if (!(spec.min_center_separation > 0.0)) fail(ErrorKind::Config, "min_center_separation must be positive");

  std::mt19937_64 rng(spec.seed);
  const auto per_axis = std::ceil(std::pow(static_cast<double>(spec.num_classes), 1.0 / static_cast<double>(spec.dim)));
  const double half_width = spec.min_center_separation * std::max(1.0, per_axis);
  std::uniform_real_distribution<double> coord(-half_width, half_width);

  constexpr int kRestarts = 100;
  constexpr int kAttemptsPerCenter = 1000;
  std::vector<Vector> centers;
  for (int restart = 0; restart < kRestarts && centers.size() < spec.num_classes; ++restart) {
    centers.clear();
    for (std::size_t k = 0; k < spec.num_classes; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < kAttemptsPerCenter && !placed; ++attempt) {
        Vector c(static_cast<Eigen::Index>(spec.dim));
        for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = coord(rng);
        placed = std::all_of(centers.begin(), centers.end(),
                             [&](const Vector& o) { return (o - c).norm() >= spec.min_center_separation; });
        if (placed) centers.push_back(std::move(c));
      }
      if (!placed) break;
    }
  }
  if (centers.size() < spec.num_classes) fail(ErrorKind::Data, "could not pack cluster centers at the requested separation");

  const auto width = std::to_string(spec.num_classes - 1).size();
  std::normal_distribution<double> noise(0.0, spec.cluster_sigma);
  SyntheticDataset out;
  std::vector<LabeledSample> samples;
  samples.reserve(spec.num_classes * spec.samples_per_class);
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    auto name = std::to_string(k);
    name.insert(0, width - name.size(), '0');
    const ClassId id(name);
    out.centers.emplace(id, centers[k]);
    for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
      Vector x = centers[k];
      for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += noise(rng);
      samples.push_back({std::move(x), id});
    }
  }
  out.data = Dataset(std::move(samples));
  return out;
}

std::vector<LabeledSample> OpenWorldSplit::initial_train() const {
  std::vector<LabeledSample> out;
  for (const auto& id : initial_classes) {
    const auto& s = train.at(id);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

std::vector<LabeledSample> OpenWorldSplit::test_samples() const {
  std::vector<LabeledSample> out;
  for (const auto& [_, s] : test) out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::vector<LabeledSample> OpenWorldSplit::test_of(const ClassId& id) const {
  auto it = test.find(id);
  return it == test.end() ? std::vector<LabeledSample>{} : it->second;
}

OpenWorldSplit split_open_world(const Dataset& dataset, std::size_t num_known_initial,
                                std::size_t num_known_total, std::uint64_t seed, double test_fraction) {
  auto classes = dataset.class_ids();
  if (num_known_initial == 0) fail(ErrorKind::Config, "need at least one initial known class");
  if (num_known_total < num_known_initial) fail(ErrorKind::Config, "num_known_total < num_known_initial");
  if (classes.size() < num_known_total) {
    fail(ErrorKind::Data, "dataset has " + std::to_string(classes.size()) + " classes, split needs " +
                              std::to_string(num_known_total));
  }
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) fail(ErrorKind::Config, "test_fraction must lie in [0, 1)");

  std::mt19937_64 rng(seed);
  std::shuffle(classes.begin(), classes.end(), rng);

  OpenWorldSplit split;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (i < num_known_initial) {
      split.initial_classes.push_back(classes[i]);
    } else if (i < num_known_total) {
      split.incremental_classes.push_back(classes[i]);
    } else {
      split.unknown_classes.push_back(classes[i]);
    }
  }
  std::sort(split.initial_classes.begin(), split.initial_classes.end());

  for (const auto& id : dataset.class_ids()) {
    auto samples = dataset.of_class(id);
    std::shuffle(samples.begin(), samples.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(samples.size())));
    auto& test = split.test[id];
    auto& train = split.train[id];
    test.assign(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.assign(samples.begin() + static_cast<std::ptrdiff_t>(n_test), samples.end());
  }
  return split;
}

}  // namespace owr
