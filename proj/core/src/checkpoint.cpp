#include "owr/checkpoint.hpp"

#include "owr/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace owr {

using nlohmann::json;

namespace {

json vector_to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json matrix_to_json(const Matrix& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto flat = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != flat.size()) {
    fail(ErrorKind::Data, "matrix payload size does not match its shape");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

json network_json(const EmbeddingNetwork& net) {
  json layers = json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"input_dim", l.input_dim()},
                      {"output_dim", l.output_dim()},
                      {"activation", l.activation == Activation::Rectifier ? "rectifier" : "identity"},
                      {"weight", matrix_to_json(l.weight)},
                      {"bias", vector_to_json(l.bias)}});
  }
  return json{{"input_dim", net.input_dim()}, {"output_dim", net.output_dim()}, {"layers", layers}};
}

EmbeddingNetwork network_from(const json& j) {
  std::vector<DenseLayer> layers;
  for (const auto& lj : j.at("layers")) {
    DenseLayer l;
    const auto act = lj.at("activation").get<std::string>();
    if (act == "rectifier") {
      l.activation = Activation::Rectifier;
    } else if (act == "identity") {
      l.activation = Activation::Identity;
    } else {
      fail(ErrorKind::Data, "unknown activation '" + act + "'");
    }
    l.weight = matrix_from_json(lj.at("weight"));
    l.bias = vector_from_json(lj.at("bias"));
    layers.push_back(std::move(l));
  }
  return EmbeddingNetwork(std::move(layers));
}

json prototypes_json(const PrototypeStore& store) {
  json protos = json::array();
  for (const auto& [id, p] : store) {
    protos.push_back({{"class", id.str()}, {"count", p.count}, {"mean", vector_to_json(p.mean)}});
  }
  return json{{"dim", store.dim()}, {"classes", protos}};
}

PrototypeStore prototypes_from(const json& j) {
  PrototypeStore store(j.at("dim").get<std::size_t>());
  for (const auto& pj : j.at("classes")) {
    store.set(ClassPrototype{ClassId(pj.at("class").get<std::string>()), vector_from_json(pj.at("mean")),
                             pj.at("count").get<std::uint64_t>()});
  }
  return store;
}

json header(const char* format) { return json{{"format", format}, {"version", kCheckpointVersion}}; }

void check_header(const json& j, const char* format) {
  if (j.value("format", std::string{}) != format) {
    fail(ErrorKind::Data, std::string("not a ") + format + " document");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    fail(ErrorKind::Data, "unsupported " + std::string(format) + " version");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("malformed document: ") + e.what());
  }
}

}  // namespace

std::string network_to_json(const EmbeddingNetwork& net) {
  auto j = header("owr-network");
  j["network"] = network_json(net);
  return j.dump();
}

EmbeddingNetwork network_from_json(const std::string& text) {
  return guarded([&] {
    const auto j = json::parse(text);
    check_header(j, "owr-network");
    return network_from(j.at("network"));
  });
}

std::string checkpoint_to_json(const OwrState& state) {
  auto j = header("owr-checkpoint");
  json known = json::array();
  for (const auto& id : state.known_classes) known.push_back(id.str());
  j["known_classes"] = known;
  j["network"] = network_json(state.network);
  j["snapshot"] = state.snapshot ? network_json(state.snapshot->network()) : json(nullptr);
  j["prototypes"] = prototypes_json(state.prototypes);
  j["threshold"] = {{"theta", state.threshold.theta}, {"step", state.threshold.step}};

  json mem = json::array();
  for (const auto& [id, list] : state.memory.per_class()) {
    json items = json::array();
    for (const auto& e : list) items.push_back({{"input", vector_to_json(e.sample.input)}, {"relevance", e.relevance}});
    mem.push_back({{"class", id.str()}, {"exemplars", items}});
  }
  j["memory"] = {{"capacity", state.memory.capacity()}, {"classes", mem}};
  j["incremental_step"] = state.incremental_step;
  j["oracle_collisions"] = state.oracle_collisions;
  return j.dump();
}

OwrState checkpoint_from_json(const std::string& text) {
  return guarded([&] {
    const auto j = json::parse(text);
    check_header(j, "owr-checkpoint");

    auto network = network_from(j.at("network"));
    std::optional<NetworkSnapshot> snap;
    if (!j.at("snapshot").is_null()) snap.emplace(network_from(j.at("snapshot")));

    ExemplarMemory memory(j.at("memory").at("capacity").get<std::size_t>());
    for (const auto& cj : j.at("memory").at("classes")) {
      const ClassId id(cj.at("class").get<std::string>());
      std::vector<Exemplar> list;
      for (const auto& ej : cj.at("exemplars")) {
        list.push_back({LabeledSample{vector_from_json(ej.at("input")), id}, ej.at("relevance").get<double>()});
      }
      memory.admit_class(id, std::move(list));
    }

    OwrState state{{},
                   std::move(network),
                   std::move(snap),
                   prototypes_from(j.at("prototypes")),
                   ThresholdState{j.at("threshold").at("theta").get<double>(),
                                  j.at("threshold").at("step").get<std::uint64_t>()},
                   std::move(memory),
                   j.at("incremental_step").get<std::size_t>(),
                   j.at("oracle_collisions").get<std::size_t>(),
                   {}};
    for (const auto& k : j.at("known_classes")) state.known_classes.emplace_back(k.get<std::string>());

    if (state.prototypes.size() != state.known_classes.size()) {
      fail(ErrorKind::Data, "checkpoint prototypes do not match the known-class set");
    }
    for (const auto& id : state.known_classes) {
      if (!state.prototypes.contains(id)) fail(ErrorKind::Data, "checkpoint lacks a prototype for '" + id.str() + "'");
    }
    if (state.prototypes.dim() != state.network.output_dim()) {
      fail(ErrorKind::Data, "checkpoint prototype dimension differs from the network output");
    }
    return state;
  });
}

void save_checkpoint(const OwrState& state, const std::filesystem::path& path) {
  write_file(path, checkpoint_to_json(state));
}

OwrState load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_file(path)); }

void save_nno_model(const NnoModel& model, const std::filesystem::path& path) {
  auto j = header("owr-nno");
  j["network"] = network_json(model.network);
  j["metric"] = matrix_to_json(model.metric.w);
  j["tau"] = model.params.tau;
  j["eta_tau"] = model.params.eta_tau;
  j["prototypes"] = prototypes_json(model.prototypes);
  write_file(path, j.dump());
}

NnoModel load_nno_model(const std::filesystem::path& path) {
  const auto text = read_file(path);
  return guarded([&] {
    const auto j = json::parse(text);
    check_header(j, "owr-nno");
    NnoModel m{network_from(j.at("network")), LinearMetric{matrix_from_json(j.at("metric"))},
               NnoParams{j.at("tau").get<double>(), j.at("eta_tau").get<double>()},
               prototypes_from(j.at("prototypes"))};
    m.params.validate();
    return m;
  });
}

}  // namespace owr
