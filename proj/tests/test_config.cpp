#include <catch2/catch_amalgamated.hpp>

#include "pnn/config.hpp"

using namespace pnn;

namespace {

nlohmann::json minimal_config() {
  return nlohmann::json{{"family", "quadratic"},
                        {"n_train_tasks", 10},
                        {"n_test_tasks", 20},
                        {"m_points", 5},
                        {"param_dims", 3},
                        {"hidden_layers", {8, 8}},
                        {"train", {{"epochs", 50}}},
                        {"seeds", {1, 2}}};
}

}  // namespace

TEST_CASE("config parses with defaults and scalar-or-list fields", "[config]") {
  const ExperimentConfig cfg = parse_config(minimal_config());
  REQUIRE(cfg.family == Family::Quadratic);
  REQUIRE(cfg.n_train_tasks == std::vector<std::size_t>{10});
  REQUIRE(cfg.m_points == std::vector<std::size_t>{5});
  REQUIRE(cfg.param_dims == std::vector<std::size_t>{3});
  REQUIRE(cfg.train.epochs == 50);
  REQUIRE(cfg.train.batch_size == 0);  // full batch by default
  REQUIRE(cfg.recalib.epochs == 100);
  REQUIRE(cfg.recalib.batch_size == 10);
  REQUIRE(cfg.recalib.rate == 0.01);
  REQUIRE(cfg.recalib.init == RecalibInit::MeanOfTrained);

  nlohmann::json j = minimal_config();
  j["m_points"] = {3, 4, 5, 6};
  j["train"]["batch_size"] = "full";
  const ExperimentConfig swept = parse_config(j);
  REQUIRE(swept.m_points == std::vector<std::size_t>{3, 4, 5, 6});
  REQUIRE(swept.train.batch_size == 0);
}

TEST_CASE("unknown keys are rejected everywhere", "[config]") {
  nlohmann::json j = minimal_config();
  j["n_traiin_tasks"] = 10;  // typo
  REQUIRE_THROWS_AS(parse_config(j), ConfigError);

  nlohmann::json j2 = minimal_config();
  j2["train"]["learning_rate"] = 0.01;  // wrong name
  REQUIRE_THROWS_AS(parse_config(j2), ConfigError);

  nlohmann::json j3 = minimal_config();
  j3["recalib"] = {{"epoch", 100}};
  REQUIRE_THROWS_AS(parse_config(j3), ConfigError);
}

TEST_CASE("family-specific knobs are validated", "[config]") {
  nlohmann::json j = minimal_config();
  j["noise_sigma"] = 0.1;  // not a noisy_quadratic config
  REQUIRE_THROWS_AS(parse_config(j), ConfigError);

  nlohmann::json j2 = minimal_config();
  j2["family"] = "noisy_quadratic";
  j2["noise_sigma"] = 0.2;
  REQUIRE(parse_config(j2).noise_sigma == 0.2);

  nlohmann::json j3 = minimal_config();
  j3["tau_reading"] = "printed";
  REQUIRE_THROWS_AS(parse_config(j3), ConfigError);

  nlohmann::json j4 = minimal_config();
  j4["family"] = "bond";
  j4["tau_reading"] = "corrected";
  REQUIRE(parse_config(j4).tau_reading == TauReading::Corrected);

  nlohmann::json j5 = minimal_config();
  j5["baselines"] = {"single_network", "nonsense"};
  REQUIRE_THROWS_AS(parse_config(j5), ConfigError);

  nlohmann::json j6 = minimal_config();
  j6["train"]["decay_factor"] = 1.5;
  REQUIRE_THROWS_AS(parse_config(j6), ConfigError);
}

TEST_CASE("fingerprint tracks every meaningful field", "[config]") {
  const ExperimentConfig base = parse_config(minimal_config());
  const std::string fp = config_fingerprint(base);
  REQUIRE(fp.size() == 16);
  REQUIRE(config_fingerprint(parse_config(minimal_config())) == fp);

  auto changed_fp = [&](auto mutate) {
    nlohmann::json j = minimal_config();
    mutate(j);
    return config_fingerprint(parse_config(j));
  };
  REQUIRE(changed_fp([](auto& j) { j["n_test_tasks"] = 21; }) != fp);
  REQUIRE(changed_fp([](auto& j) { j["seeds"] = {1, 3}; }) != fp);
  REQUIRE(changed_fp([](auto& j) { j["train"]["epochs"] = 51; }) != fp);
  REQUIRE(changed_fp([](auto& j) { j["hidden_layers"] = {8, 9}; }) != fp);
  REQUIRE(changed_fp([](auto& j) { j["recalib"] = {{"rate", 0.02}}; }) != fp);

  // out_dir is presentation, not semantics.
  REQUIRE(changed_fp([](auto& j) { j["out_dir"] = "elsewhere"; }) == fp);
}
