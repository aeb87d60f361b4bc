#pragma once

#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pnn/model_io.hpp"
#include "pnn/pnn.hpp"
#include "pnn/taskgen.hpp"

namespace pnn {

inline constexpr const char* kConfigFormatVersion = "pnn-config/1";
inline constexpr const char* kLibraryVersion = "0.1.0";

// File-backed experiment description. n_train_tasks, m_points and param_dims
// accept a single value or a sweep list; stages run the full grid, which is
// what lets one config drive a whole error table.
struct ExperimentConfig {
  Family family = Family::Quadratic;
  std::vector<std::size_t> n_train_tasks = {100};
  std::size_t n_test_tasks = 250;
  std::vector<std::size_t> m_points = {5};
  std::vector<std::size_t> param_dims = {3};
  std::vector<std::size_t> hidden_layers = {32, 32, 32};
  TrainConfig train{};
  RecalibConfig recalib{};
  std::vector<std::uint64_t> seeds = {1};
  std::vector<std::string> baselines;  // "single_network", "polyfit", "polyfit_zero"
  double noise_sigma = 0.1;            // noisy_quadratic only
  TauReading tau_reading = TauReading::Printed;  // bond only
  double maturity_split_years = 0.25;            // bond histogram split
  std::string out_dir;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

inline std::vector<std::size_t> counts_field_allow_zero(const nlohmann::json& j,
                                                        const std::string& key) {
  const auto& v = j.at(key);
  std::vector<std::size_t> out;
  if (v.is_array())
    out = v.get<std::vector<std::size_t>>();
  else
    out.push_back(v.get<std::size_t>());
  if (out.empty()) throw ConfigError("'" + key + "' must not be empty");
  return out;
}

inline std::vector<std::size_t> counts_field(const nlohmann::json& j, const std::string& key) {
  auto out = counts_field_allow_zero(j, key);
  for (std::size_t c : out)
    if (c == 0) throw ConfigError("'" + key + "' entries must be positive");
  return out;
}

}  // namespace detail

inline Family family_from_name(const std::string& name) {
  if (name == "quadratic") return Family::Quadratic;
  if (name == "noisy_quadratic") return Family::NoisyQuadratic;
  if (name == "interdep") return Family::Interdep;
  if (name == "regime") return Family::Regime;
  if (name == "bond") return Family::Bond;
  throw ConfigError("unknown family '" + name + "'");
}

inline std::string recalib_init_name(RecalibInit init) {
  switch (init) {
    case RecalibInit::MeanOfTrained: return "mean_of_trained";
    case RecalibInit::LastTask: return "last_task";
    case RecalibInit::Zero: return "zero";
    case RecalibInit::Given: return "given";
  }
  return "?";
}

inline RecalibInit recalib_init_from_name(const std::string& name) {
  if (name == "mean_of_trained") return RecalibInit::MeanOfTrained;
  if (name == "last_task") return RecalibInit::LastTask;
  if (name == "zero") return RecalibInit::Zero;
  if (name == "given") return RecalibInit::Given;
  throw ConfigError("unknown recalib init '" + name + "'");
}

// Strict parse: unknown keys anywhere are rejected, as are family knobs on
// the wrong family, so a typo can never silently fall back to a default.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  detail::reject_unknown_keys(
      j,
      {"family", "n_train_tasks", "n_test_tasks", "m_points", "param_dims", "hidden_layers",
       "train", "recalib", "seeds", "baselines", "noise_sigma", "tau_reading",
       "maturity_split_years", "out_dir"},
      "config");
  ExperimentConfig cfg;
  cfg.family = family_from_name(j.at("family").get<std::string>());
  cfg.n_train_tasks = detail::counts_field(j, "n_train_tasks");
  cfg.n_test_tasks = j.at("n_test_tasks").get<std::size_t>();
  cfg.m_points = detail::counts_field(j, "m_points");
  cfg.param_dims = detail::counts_field_allow_zero(j, "param_dims");
  cfg.hidden_layers = j.at("hidden_layers").get<std::vector<std::size_t>>();
  if (cfg.hidden_layers.empty()) throw ConfigError("'hidden_layers' must not be empty");

  const auto& tj = j.at("train");
  detail::reject_unknown_keys(tj,
                              {"epochs", "batch_size", "initial_rate", "decay_factor",
                               "decay_every_epochs", "input_noise_sigma"},
                              "train");
  cfg.train.epochs = tj.at("epochs").get<std::size_t>();
  if (cfg.train.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (tj.contains("batch_size")) {
    const auto& b = tj.at("batch_size");
    if (b.is_string()) {
      if (b.get<std::string>() != "full") throw ConfigError("train.batch_size: use a count or 'full'");
      cfg.train.batch_size = 0;
    } else {
      cfg.train.batch_size = b.get<std::size_t>();
      if (cfg.train.batch_size == 0) throw ConfigError("train.batch_size must be positive or 'full'");
    }
  }
  cfg.train.schedule.initial_rate = tj.value("initial_rate", 0.01);
  cfg.train.schedule.decay_factor = tj.value("decay_factor", 0.995);
  cfg.train.schedule.decay_every = tj.value("decay_every_epochs", std::size_t{10});
  if (!(cfg.train.schedule.initial_rate > 0.0)) throw ConfigError("train.initial_rate must be positive");
  if (!(cfg.train.schedule.decay_factor > 0.0 && cfg.train.schedule.decay_factor <= 1.0))
    throw ConfigError("train.decay_factor must lie in (0, 1]");
  if (cfg.train.schedule.decay_every == 0) throw ConfigError("train.decay_every_epochs must be >= 1");
  cfg.train.input_noise_sigma = tj.value("input_noise_sigma", 0.0);
  if (cfg.train.input_noise_sigma < 0.0) throw ConfigError("train.input_noise_sigma must be >= 0");

  if (j.contains("recalib")) {
    const auto& rj = j.at("recalib");
    detail::reject_unknown_keys(rj, {"epochs", "batch_size", "rate", "init"}, "recalib");
    cfg.recalib.epochs = rj.value("epochs", std::size_t{100});
    cfg.recalib.batch_size = rj.value("batch_size", std::size_t{10});
    cfg.recalib.rate = rj.value("rate", 0.01);
    cfg.recalib.init = recalib_init_from_name(rj.value("init", std::string("mean_of_trained")));
    if (cfg.recalib.init == RecalibInit::Given)
      throw ConfigError("recalib.init 'given' is not usable from a config file");
    if (cfg.recalib.epochs < 1 || !(cfg.recalib.rate > 0.0))
      throw ConfigError("recalib: epochs must be >= 1 and rate positive");
  }

  cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (cfg.seeds.empty()) throw ConfigError("'seeds' must not be empty");
  if (j.contains("baselines")) {
    cfg.baselines = j.at("baselines").get<std::vector<std::string>>();
    for (const std::string& b : cfg.baselines) {
      if (b != "single_network" && b != "polyfit" && b != "polyfit_zero")
        throw ConfigError("unknown baseline '" + b + "'");
      if ((b == "polyfit" || b == "polyfit_zero") && cfg.family != Family::NoisyQuadratic &&
          cfg.family != Family::Quadratic)
        throw ConfigError("baseline '" + b + "' only applies to one-dimensional quadratic families");
      if (b == "single_network" && cfg.family == Family::Bond)
        throw ConfigError("baseline 'single_network' is not defined for the bond family");
    }
  }

  if (j.contains("noise_sigma")) {
    if (cfg.family != Family::NoisyQuadratic)
      throw ConfigError("'noise_sigma' only applies to the noisy_quadratic family");
    cfg.noise_sigma = j.at("noise_sigma").get<double>();
    if (cfg.noise_sigma < 0.0) throw ConfigError("'noise_sigma' must be >= 0");
  }
  if (j.contains("tau_reading")) {
    if (cfg.family != Family::Bond) throw ConfigError("'tau_reading' only applies to the bond family");
    const std::string r = j.at("tau_reading").get<std::string>();
    if (r == "printed")
      cfg.tau_reading = TauReading::Printed;
    else if (r == "corrected")
      cfg.tau_reading = TauReading::Corrected;
    else
      throw ConfigError("'tau_reading' must be 'printed' or 'corrected'");
  }
  if (j.contains("maturity_split_years")) {
    if (cfg.family != Family::Bond)
      throw ConfigError("'maturity_split_years' only applies to the bond family");
    cfg.maturity_split_years = j.at("maturity_split_years").get<double>();
    if (!(cfg.maturity_split_years > 0.0))
      throw ConfigError("'maturity_split_years' must be positive");
  }
  cfg.out_dir = j.value("out_dir", std::string{});
  if (cfg.n_test_tasks == 0) throw ConfigError("'n_test_tasks' must be positive");
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_json_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// Canonical form: nlohmann::json orders keys, so dump() is stable. Every
// semantically meaningful field participates; out_dir does not.
inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["format_version"] = kConfigFormatVersion;
  j["family"] = family_name(cfg.family);
  j["n_train_tasks"] = cfg.n_train_tasks;
  j["n_test_tasks"] = cfg.n_test_tasks;
  j["m_points"] = cfg.m_points;
  j["param_dims"] = cfg.param_dims;
  j["hidden_layers"] = cfg.hidden_layers;
  j["train"] = {{"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"initial_rate", cfg.train.schedule.initial_rate},
                {"decay_factor", cfg.train.schedule.decay_factor},
                {"decay_every_epochs", cfg.train.schedule.decay_every},
                {"input_noise_sigma", cfg.train.input_noise_sigma}};
  j["recalib"] = {{"epochs", cfg.recalib.epochs},
                  {"batch_size", cfg.recalib.batch_size},
                  {"rate", cfg.recalib.rate},
                  {"init", recalib_init_name(cfg.recalib.init)}};
  j["seeds"] = cfg.seeds;
  j["baselines"] = cfg.baselines;
  if (cfg.family == Family::NoisyQuadratic) j["noise_sigma"] = cfg.noise_sigma;
  if (cfg.family == Family::Bond) {
    j["tau_reading"] = cfg.tau_reading == TauReading::Printed ? "printed" : "corrected";
    j["maturity_split_years"] = cfg.maturity_split_years;
  }
  return j;
}

// FNV-1a over the canonical serialization.
inline std::string config_fingerprint(const ExperimentConfig& cfg) {
  const std::string s = config_to_json(cfg).dump();
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pnn
