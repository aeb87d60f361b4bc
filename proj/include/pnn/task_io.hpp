#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pnn/csv.hpp"
#include "pnn/model_io.hpp"
#include "pnn/taskgen.hpp"

namespace pnn {

inline constexpr const char* kTruthFormatVersion = "pnn-truth/1";

namespace detail {

inline nlohmann::json ns_to_json(const NelsonSiegelParams& p) {
  return {{"beta0", p.beta0}, {"beta1", p.beta1}, {"beta2", p.beta2}, {"tau_years", p.tau}};
}

inline NelsonSiegelParams ns_from_json(const nlohmann::json& j) {
  return {j.at("beta0").get<double>(), j.at("beta1").get<double>(), j.at("beta2").get<double>(),
          j.at("tau_years").get<double>()};
}

}  // namespace detail

inline nlohmann::json truth_to_json(const GroundTruth& t) {
  nlohmann::json j;
  j["family"] = family_name(t.family);
  switch (t.family) {
    case Family::Quadratic: {
      const auto& p = std::get<QuadraticParams>(t.params);
      j["a"] = p.a;
      j["b"] = p.b;
      j["c"] = p.c;
      break;
    }
    case Family::NoisyQuadratic: {
      const auto& p = std::get<NoisyQuadraticParams>(t.params);
      j["a"] = p.a;
      j["b"] = p.b;
      break;
    }
    case Family::Interdep: {
      const auto& p = std::get<InterdepParams>(t.params);
      j["a"] = p.a;
      j["b"] = p.b;
      j["c"] = p.c;
      j["d"] = p.d;
      break;
    }
    case Family::Regime: {
      const auto& p = std::get<RegimeParams>(t.params);
      j["regime"] = p.regime;
      j["a"] = p.a;
      break;
    }
    case Family::Bond: {
      const auto& c = std::get<BondCurves>(t.params);
      j["tau_reading"] = c.tau_reading == TauReading::Printed ? "printed" : "corrected";
      for (std::size_t s = 0; s < 2; ++s) {
        nlohmann::json sets = nlohmann::json::array();
        for (std::size_t k = 0; k < 4; ++k)
          sets.push_back(detail::ns_to_json(s == 0 ? c.set1[k] : c.set2[k]));
        j[s == 0 ? "set1" : "set2"] = sets;
      }
      break;
    }
  }
  return j;
}

inline GroundTruth truth_from_json(const nlohmann::json& j) {
  const std::string fam = j.at("family").get<std::string>();
  GroundTruth t;
  if (fam == "quadratic") {
    t.family = Family::Quadratic;
    t.params = QuadraticParams{j.at("a").get<double>(), j.at("b").get<double>(),
                               j.at("c").get<double>()};
  } else if (fam == "noisy_quadratic") {
    t.family = Family::NoisyQuadratic;
    t.params = NoisyQuadraticParams{j.at("a").get<double>(), j.at("b").get<double>()};
  } else if (fam == "interdep") {
    t.family = Family::Interdep;
    t.params = InterdepParams{j.at("a").get<double>(), j.at("b").get<double>(),
                              j.at("c").get<double>(), j.at("d").get<double>()};
  } else if (fam == "regime") {
    t.family = Family::Regime;
    t.params = RegimeParams{j.at("regime").get<int>(), j.at("a").get<double>()};
  } else if (fam == "bond") {
    t.family = Family::Bond;
    BondCurves c;
    c.tau_reading = j.at("tau_reading").get<std::string>() == "printed" ? TauReading::Printed
                                                                        : TauReading::Corrected;
    for (std::size_t k = 0; k < 4; ++k) {
      c.set1[k] = detail::ns_from_json(j.at("set1").at(k));
      c.set2[k] = detail::ns_from_json(j.at("set2").at(k));
    }
    t.params = c;
  } else {
    throw IoError("unknown task family '" + fam + "'");
  }
  return t;
}

// One row per sample: task_id, sample_id, x..., y... The ground truth goes to
// a JSON sidecar so errors against the noiseless generator stay computable.
inline void save_task_set_csv(const TaskSet& set, const std::filesystem::path& csv_path,
                              const std::filesystem::path& truth_path) {
  std::vector<std::string> header = {"task_id", "sample_id"};
  for (std::size_t c = 0; c < set.k1; ++c) header.push_back("x" + std::to_string(c));
  for (std::size_t c = 0; c < set.k2; ++c) header.push_back("y" + std::to_string(c));
  CsvWriter csv(csv_path, header);
  for (std::size_t t = 0; t < set.tasks.size(); ++t) {
    const TaskSample& task = set.tasks[t];
    for (std::size_t r = 0; r < task.x.rows; ++r) {
      std::vector<std::string> cells = {std::to_string(t), std::to_string(r)};
      for (std::size_t c = 0; c < set.k1; ++c) cells.push_back(format_double(task.x(r, c)));
      for (std::size_t c = 0; c < set.k2; ++c) cells.push_back(format_double(task.y(r, c)));
      csv.row_cells(cells);
    }
  }

  nlohmann::json j;
  j["format_version"] = kTruthFormatVersion;
  j["family"] = family_name(set.family);
  j["k1"] = set.k1;
  j["k2"] = set.k2;
  j["tasks"] = nlohmann::json::array();
  for (const TaskSample& task : set.tasks) j["tasks"].push_back(truth_to_json(task.truth));
  write_json_file(j, truth_path);
}

inline TaskSet load_task_set(const std::filesystem::path& csv_path,
                             const std::filesystem::path& truth_path) {
  const nlohmann::json j = read_json_file(truth_path);
  if (j.value("format_version", "") != kTruthFormatVersion)
    throw IoError("unsupported truth format version in " + truth_path.string());
  TaskSet set;
  set.k1 = j.at("k1").get<std::size_t>();
  set.k2 = j.at("k2").get<std::size_t>();
  for (const auto& tj : j.at("tasks")) {
    TaskSample task;
    task.truth = truth_from_json(tj);
    set.tasks.push_back(std::move(task));
  }
  if (set.tasks.empty()) throw IoError("task set has no tasks: " + truth_path.string());
  set.family = set.tasks.front().truth.family;

  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty task CSV " + csv_path.string());
  std::vector<std::vector<std::vector<double>>> xs(set.tasks.size());
  std::vector<std::vector<std::vector<double>>> ys(set.tasks.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> fields;
    while (std::getline(ss, cell, ',')) fields.push_back(std::stod(cell));
    if (fields.size() != 2 + set.k1 + set.k2)
      throw IoError("bad column count in " + csv_path.string());
    const auto t = static_cast<std::size_t>(fields[0]);
    if (t >= set.tasks.size()) throw IoError("task id out of range in " + csv_path.string());
    xs[t].emplace_back(fields.begin() + 2, fields.begin() + 2 + set.k1);
    ys[t].emplace_back(fields.begin() + 2 + set.k1, fields.end());
  }
  for (std::size_t t = 0; t < set.tasks.size(); ++t) {
    if (xs[t].empty()) throw IoError("task " + std::to_string(t) + " has no samples");
    TaskSample& task = set.tasks[t];
    task.x = Matrix2D(xs[t].size(), set.k1);
    task.y = Matrix2D(ys[t].size(), set.k2);
    for (std::size_t r = 0; r < xs[t].size(); ++r) {
      std::copy(xs[t][r].begin(), xs[t][r].end(), task.x.row_ptr(r));
      std::copy(ys[t][r].begin(), ys[t][r].end(), task.y.row_ptr(r));
    }
  }
  return set;
}

// Single-document JSON form of a task set, for compact round-tripping.
inline nlohmann::json task_set_to_json(const TaskSet& set) {
  nlohmann::json j;
  j["format_version"] = kTruthFormatVersion;
  j["family"] = family_name(set.family);
  j["k1"] = set.k1;
  j["k2"] = set.k2;
  j["tasks"] = nlohmann::json::array();
  for (const TaskSample& task : set.tasks) {
    nlohmann::json tj;
    tj["truth"] = truth_to_json(task.truth);
    tj["m"] = task.x.rows;
    tj["x"] = task.x.data;
    tj["y"] = task.y.data;
    j["tasks"].push_back(std::move(tj));
  }
  return j;
}

inline TaskSet task_set_from_json(const nlohmann::json& j) {
  if (j.value("format_version", "") != kTruthFormatVersion)
    throw IoError("unsupported task set format version");
  TaskSet set;
  set.k1 = j.at("k1").get<std::size_t>();
  set.k2 = j.at("k2").get<std::size_t>();
  for (const auto& tj : j.at("tasks")) {
    TaskSample task;
    task.truth = truth_from_json(tj.at("truth"));
    const auto m = tj.at("m").get<std::size_t>();
    task.x = Matrix2D(m, set.k1);
    task.x.data = tj.at("x").get<std::vector<double>>();
    task.y = Matrix2D(m, set.k2);
    task.y.data = tj.at("y").get<std::vector<double>>();
    if (task.x.data.size() != m * set.k1 || task.y.data.size() != m * set.k2)
      throw IoError("task set document: sample size mismatch");
    set.tasks.push_back(std::move(task));
  }
  if (set.tasks.empty()) throw IoError("task set document has no tasks");
  set.family = set.tasks.front().truth.family;
  return set;
}

}  // namespace pnn
