#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "pnn/pnn.hpp"

namespace pnn {

inline constexpr const char* kModelFormatVersion = "pnn-model/1";

inline std::string activation_name(Activation a) {
  return a == Activation::Selu ? "selu" : "identity";
}

inline Activation activation_from_name(const std::string& name) {
  if (name == "selu") return Activation::Selu;
  if (name == "identity") return Activation::Identity;
  throw IoError("unknown activation '" + name + "'");
}

// Self-describing JSON document: layer dims, activation tag, row-major
// weight/bias arrays. Doubles are emitted with shortest round-trip encoding,
// so load(save(m)) preserves every value exactly.
inline nlohmann::json mlp_to_json(const MlpModel& m) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = "mlp";
  j["layer_dims"] = m.layer_dims;
  j["hidden_activation"] = activation_name(m.hidden_activation);
  j["weights"] = nlohmann::json::array();
  for (const auto& w : m.weights) j["weights"].push_back(w.data);
  j["biases"] = nlohmann::json::array();
  for (const auto& b : m.biases) j["biases"].push_back(b);
  return j;
}

inline MlpModel mlp_from_json(const nlohmann::json& j) {
  if (j.value("format_version", "") != kModelFormatVersion)
    throw IoError("unsupported model format version");
  MlpModel m;
  m.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
  if (m.layer_dims.size() < 2) throw IoError("model document: need at least one layer");
  m.hidden_activation = activation_from_name(j.at("hidden_activation").get<std::string>());
  const auto& ws = j.at("weights");
  const auto& bs = j.at("biases");
  if (ws.size() != m.layer_dims.size() - 1 || bs.size() != ws.size())
    throw IoError("model document: layer count mismatch");
  for (std::size_t i = 0; i + 1 < m.layer_dims.size(); ++i) {
    Matrix2D w(m.layer_dims[i + 1], m.layer_dims[i]);
    const auto values = ws[i].get<std::vector<double>>();
    if (values.size() != w.size()) throw IoError("model document: weight size mismatch");
    w.data = values;
    m.weights.push_back(std::move(w));
    auto bias = bs[i].get<std::vector<double>>();
    if (bias.size() != m.layer_dims[i + 1]) throw IoError("model document: bias size mismatch");
    m.biases.push_back(std::move(bias));
  }
  return m;
}

// Extends the base document with the embedding table and the k1/param split.
inline nlohmann::json pnn_to_json(const PnnModel& m) {
  nlohmann::json j = mlp_to_json(m.base);
  j["kind"] = "pnn";
  j["k1"] = m.k1;
  j["param_dim"] = m.param_dim;
  j["param_table"] = m.params.values.data;
  j["n_tasks"] = m.params.n_tasks;
  return j;
}

inline PnnModel pnn_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "pnn") throw IoError("expected a pnn model document");
  PnnModel m;
  m.base = mlp_from_json(j);
  m.k1 = j.at("k1").get<std::size_t>();
  m.param_dim = j.at("param_dim").get<std::size_t>();
  if (m.base.input_dim() != m.k1 + m.param_dim)
    throw IoError("model document: k1 + param_dim must equal the input width");
  m.params.n_tasks = j.at("n_tasks").get<std::size_t>();
  m.params.param_dim = m.param_dim;
  m.params.values = Matrix2D(m.params.n_tasks, m.param_dim);
  const auto values = j.at("param_table").get<std::vector<double>>();
  if (values.size() != m.params.values.size())
    throw IoError("model document: param table size mismatch");
  m.params.values.data = values;
  return m;
}

inline void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(1) << '\n';
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

inline void save_pnn(const PnnModel& m, const std::filesystem::path& path) {
  write_json_file(pnn_to_json(m), path);
}

inline PnnModel load_pnn(const std::filesystem::path& path) {
  return pnn_from_json(read_json_file(path));
}

}  // namespace pnn
