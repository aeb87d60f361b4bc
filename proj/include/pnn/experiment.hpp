#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "pnn/baselines.hpp"
#include "pnn/config.hpp"
#include "pnn/csv.hpp"
#include "pnn/metrics.hpp"
#include "pnn/model_io.hpp"
#include "pnn/task_io.hpp"

namespace pnn {

namespace fs = std::filesystem;

inline constexpr const char* kManifestFormatVersion = "pnn-manifest/1";

// Seed streams per run seed: 1 = train data, 2 = test data, 3 = training,
// 4 = recalibration (then by task), 5 = baseline fits (then by task).
inline std::uint64_t stage_seed(std::uint64_t seed, std::uint64_t stream) {
  return task_seed(seed, stream);
}

// One grid cell of a config: a (n_train_tasks, m_points) combination.
struct Cell {
  std::size_t n_train = 0;
  std::size_t m_points = 0;

  std::string dir_name() const {
    return "n" + std::to_string(n_train) + "_m" + std::to_string(m_points);
  }
};

inline std::vector<Cell> config_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (std::size_t n : cfg.n_train_tasks)
    for (std::size_t m : cfg.m_points) cells.push_back({n, m});
  return cells;
}

inline fs::path cell_dir(const fs::path& out, const Cell& cell, std::uint64_t seed) {
  return out / "cells" / cell.dir_name() / ("seed_" + std::to_string(seed));
}

inline GeneratorSpec generator_spec(const ExperimentConfig& cfg, const Cell& cell,
                                    std::size_t n_tasks, std::uint64_t data_seed) {
  GeneratorSpec spec(cfg.family, n_tasks, cell.m_points, data_seed);
  spec.noise_sigma = cfg.noise_sigma;
  spec.tau_reading = cfg.tau_reading;
  return spec;
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

class ManifestRecorder {
 public:
  ManifestRecorder(std::string stage, const ExperimentConfig& cfg, fs::path out)
      : stage_(std::move(stage)), out_(std::move(out)),
        fingerprint_(config_fingerprint(cfg)), start_(std::chrono::steady_clock::now()) {}

  // Every artifact a stage writes is recorded exactly once, by out-relative path.
  fs::path add(const fs::path& relative) {
    artifacts_.push_back(relative.generic_string());
    fs::create_directories((out_ / relative).parent_path());
    return out_ / relative;
  }

  void finish() const {
    nlohmann::json j;
    j["format_version"] = kManifestFormatVersion;
    j["stage"] = stage_;
    j["config_fingerprint"] = fingerprint_;
    j["library_version"] = kLibraryVersion;
    j["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    j["artifacts"] = artifacts_;
    write_json_file(j, out_ / ("manifest_" + stage_ + ".json"));
  }

 private:
  std::string stage_;
  fs::path out_;
  std::string fingerprint_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> artifacts_;
};

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

inline void run_gen(const ExperimentConfig& cfg, const fs::path& out) {
  ManifestRecorder manifest("gen", cfg, out);
  fs::create_directories(out);
  write_json_file(config_to_json(cfg), manifest.add("config.json"));
  for (const Cell& cell : config_cells(cfg)) {
    for (std::uint64_t seed : cfg.seeds) {
      const fs::path dir = fs::path("cells") / cell.dir_name() / ("seed_" + std::to_string(seed));
      const TaskSet train =
          generate(generator_spec(cfg, cell, cell.n_train, stage_seed(seed, 1)));
      const TaskSet test =
          generate(generator_spec(cfg, cell, cfg.n_test_tasks, stage_seed(seed, 2)));
      save_task_set_csv(train, manifest.add(dir / "train_tasks.csv"),
                        manifest.add(dir / "train_truth.json"));
      save_task_set_csv(test, manifest.add(dir / "test_tasks.csv"),
                        manifest.add(dir / "test_truth.json"));
    }
  }
  manifest.finish();
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

inline void run_train(const ExperimentConfig& cfg, const fs::path& out) {
  ManifestRecorder manifest("train", cfg, out);
  for (const Cell& cell : config_cells(cfg)) {
    for (std::uint64_t seed : cfg.seeds) {
      const fs::path dir = fs::path("cells") / cell.dir_name() / ("seed_" + std::to_string(seed));
      if (!fs::exists(out / dir / "train_tasks.csv"))
        throw IoError("missing task files for " + dir.generic_string() + "; run gen first");
      const TaskSet train =
          load_task_set(out / dir / "train_tasks.csv", out / dir / "train_truth.json");
      for (std::size_t l : cfg.param_dims) {
        TrainConfig tc = cfg.train;
        tc.seed = stage_seed(seed, 3);
        const PnnTrainResult res = train_joint(train, cfg.hidden_layers, l, tc);
        save_pnn(res.model, manifest.add(dir / ("model_l" + std::to_string(l) + ".json")));
        CsvWriter loss_csv(manifest.add(dir / ("train_loss_l" + std::to_string(l) + ".csv")),
                           {"epoch", "rate", "loss"});
        for (std::size_t e = 0; e < res.epoch_losses.size(); ++e)
          loss_csv.row(e, tc.schedule.rate(e), res.epoch_losses[e]);
      }
    }
  }
  manifest.finish();
}

// ---------------------------------------------------------------------------
// recalib (+ baselines; they are test-time fits)
// ---------------------------------------------------------------------------

namespace detail {

inline void write_error_report(const ErrorReport& report, const fs::path& path) {
  CsvWriter csv(path, {"model", "family", "n_train_tasks", "m_points", "param_dim", "seed",
                       "task_id", "e_i", "is_aggregate"});
  for (std::size_t t = 0; t < report.task_errors.size(); ++t)
    csv.row(report.model, report.family, report.n_train_tasks, report.m_points, report.param_dim,
            report.seed, t, report.task_errors[t], 0);
  csv.row(report.model, report.family, report.n_train_tasks, report.m_points, report.param_dim,
          report.seed, report.task_errors.size(), report.aggregate(), 1);
}

}  // namespace detail

inline void run_recalib(const ExperimentConfig& cfg, const fs::path& out) {
  ManifestRecorder manifest("recalib", cfg, out);
  const std::string fingerprint = config_fingerprint(cfg);
  const bool is_bond = cfg.family == Family::Bond;
  const Matrix2D grid = is_bond ? Matrix2D() : family_grid(cfg.family);

  for (const Cell& cell : config_cells(cfg)) {
    for (std::uint64_t seed : cfg.seeds) {
      const fs::path dir = fs::path("cells") / cell.dir_name() / ("seed_" + std::to_string(seed));
      if (!fs::exists(out / dir / "test_tasks.csv"))
        throw IoError("missing task files for " + dir.generic_string() + "; run gen first");
      const TaskSet test =
          load_task_set(out / dir / "test_tasks.csv", out / dir / "test_truth.json");

      for (std::size_t l : cfg.param_dims) {
        const std::string tag = "l" + std::to_string(l);
        const fs::path model_path = out / dir / ("model_" + tag + ".json");
        if (!fs::exists(model_path))
          throw IoError("missing " + model_path.string() + "; run train first");
        const PnnModel model = load_pnn(model_path);

        ErrorReport report{"pnn",     family_name(cfg.family), cell.n_train, cell.m_points, l,
                           seed,      fingerprint,             {}};
        std::vector<std::string> recalib_header = {"task_id", "epoch", "loss"};
        for (std::size_t j = 0; j < l; ++j) recalib_header.push_back("p" + std::to_string(j));
        CsvWriter recalib_csv(manifest.add(dir / ("recalib_" + tag + ".csv")), recalib_header);
        std::optional<CsvWriter> residual_csv;
        if (is_bond)
          residual_csv.emplace(manifest.add(dir / ("residuals_" + tag + ".csv")),
                               std::vector<std::string>{"task_id", "maturity_years", "residual"});

        for (std::size_t t = 0; t < test.tasks.size(); ++t) {
          const TaskSample& task = test.tasks[t];
          RecalibConfig rc = cfg.recalib;
          rc.seed = task_seed(stage_seed(seed, 4), t);
          const RecalibResult res = recalibrate(model, task, rc);
          for (std::size_t e = 0; e < res.loss_history.size(); ++e) {
            std::vector<std::string> cells_row = {std::to_string(t), std::to_string(e),
                                                  format_double(res.loss_history[e])};
            for (std::size_t j = 0; j < l; ++j)
              cells_row.push_back(e + 1 == res.loss_history.size() ? format_double(res.p_hat[j])
                                                                   : "");
            recalib_csv.row_cells(cells_row);
          }
          if (is_bond) {
            const Matrix2D preds = predict(model, task.x, res.p_hat);
            report.task_errors.push_back(
                task_error_from_targets(task.y, preds, task.x.rows));
            for (std::size_t r = 0; r < task.x.rows; ++r)
              residual_csv->row(t, task.x(r, 0) * kBondMaxMaturityYears,
                                preds(r, 0) - task.y(r, 0));
          } else {
            const Matrix2D preds = predict(model, grid, res.p_hat);
            report.task_errors.push_back(task_error(task.truth, grid, preds, cell.m_points));
          }
        }
        detail::write_error_report(report, manifest.add(dir / ("errors_" + tag + ".csv")));
      }

      for (const std::string& baseline : cfg.baselines) {
        ErrorReport report{baseline, family_name(cfg.family), cell.n_train, cell.m_points, 0,
                           seed,     fingerprint,             {}};
        for (std::size_t t = 0; t < test.tasks.size(); ++t) {
          const TaskSample& task = test.tasks[t];
          Matrix2D preds;
          if (baseline == "single_network") {
            TrainConfig tc = cfg.train;
            tc.seed = task_seed(stage_seed(seed, 5), t);
            const MlpModel net = fit_single_task(task, cfg.hidden_layers, tc);
            preds = forward(net, grid);
          } else {
            const PolyFit fit = polyfit_quadratic(task, baseline == "polyfit");
            preds = fit.predict(grid);
          }
          report.task_errors.push_back(task_error(task.truth, grid, preds, cell.m_points));
        }
        detail::write_error_report(report,
                                   manifest.add(dir / ("errors_" + baseline + ".csv")));
      }
    }
  }
  manifest.finish();
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

namespace detail {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw IoError("CSV column '" + name + "' not found");
  }
};

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    if (first) {
      table.header = cells;
      first = false;
    } else {
      table.rows.push_back(cells);
    }
  }
  return table;
}

// Mean of the per-task errors of one errors_*.csv (aggregate row excluded),
// plus the flagged aggregate.
struct ErrorSummary {
  double mean_ei = 0.0;
  double aggregate = 0.0;
  std::size_t n_tasks = 0;
};

inline ErrorSummary summarize_errors(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t ce = t.col("e_i"), ca = t.col("is_aggregate");
  ErrorSummary s;
  double sum = 0.0;
  for (const auto& row : t.rows) {
    if (row[ca] == "1") {
      s.aggregate = std::stod(row[ce]);
    } else {
      sum += std::stod(row[ce]);
      ++s.n_tasks;
    }
  }
  if (s.n_tasks == 0) throw IoError("no task rows in " + path.string());
  s.mean_ei = sum / static_cast<double>(s.n_tasks);
  return s;
}

}  // namespace detail

struct ReportResult {
  std::vector<std::string> missing;  // cells with absent inputs
};

// Aggregates every completed cell into plot-ready CSVs. Produces the pivoted
// error table, the error-versus-parameter-dimension data, projection sweeps,
// parameter scatters, recalibration histograms (bond), and cluster quality
// (regime). Missing cells are listed, not silently skipped.
inline ReportResult run_report(const ExperimentConfig& cfg, const fs::path& out) {
  ManifestRecorder manifest("report", cfg, out);
  ReportResult result;
  const std::vector<Cell> cells = config_cells(cfg);

  struct Key {
    std::string model;
    std::size_t n_train, m_points, l;
    bool operator<(const Key& o) const {
      return std::tie(model, n_train, m_points, l) < std::tie(o.model, o.n_train, o.m_points, o.l);
    }
  };
  std::map<Key, std::map<std::uint64_t, detail::ErrorSummary>> summaries;

  for (const Cell& cell : cells)
    for (std::uint64_t seed : cfg.seeds) {
      const fs::path dir = cell_dir(out, cell, seed);
      for (std::size_t l : cfg.param_dims) {
        const fs::path path = dir / ("errors_l" + std::to_string(l) + ".csv");
        if (!fs::exists(path)) {
          result.missing.push_back(cell.dir_name() + "/seed_" + std::to_string(seed) + "/l" +
                                   std::to_string(l));
          continue;
        }
        summaries[{"pnn", cell.n_train, cell.m_points, l}][seed] =
            detail::summarize_errors(path);
      }
      for (const std::string& baseline : cfg.baselines) {
        const fs::path path = dir / ("errors_" + baseline + ".csv");
        if (!fs::exists(path)) {
          result.missing.push_back(cell.dir_name() + "/seed_" + std::to_string(seed) + "/" +
                                   baseline);
          continue;
        }
        summaries[{baseline, cell.n_train, cell.m_points, 0}][seed] =
            detail::summarize_errors(path);
      }
    }
  if (!result.missing.empty()) return result;

  {
    CsvWriter csv(manifest.add(fs::path("report") / "summary.csv"),
                  {"model", "family", "n_train_tasks", "m_points", "param_dim", "seed",
                   "n_test_tasks", "mean_ei", "aggregate_e"});
    for (const auto& [key, by_seed] : summaries)
      for (const auto& [seed, s] : by_seed)
        csv.row(key.model, family_name(cfg.family), key.n_train, key.m_points, key.l, seed,
                s.n_tasks, s.mean_ei, s.aggregate);
  }

  auto seed_mean = [&](const Key& key) {
    const auto& by_seed = summaries.at(key);
    double sum = 0.0;
    for (const auto& [seed, s] : by_seed) sum += s.mean_ei;
    return sum / static_cast<double>(by_seed.size());
  };

  // Pivot: rows by points per task, columns per training-set size, with the
  // single-network baseline column when it was run.
  for (std::size_t l : cfg.param_dims) {
    CsvWriter csv(manifest.add(fs::path("report") / ("table_l" + std::to_string(l) + ".csv")),
                  [&] {
                    std::vector<std::string> header = {"m_points"};
                    for (const std::string& b : cfg.baselines)
                      if (b == "single_network") header.push_back("single_network");
                    for (std::size_t n : cfg.n_train_tasks)
                      header.push_back("n" + std::to_string(n));
                    return header;
                  }());
    for (std::size_t m : cfg.m_points) {
      std::vector<std::string> row = {std::to_string(m)};
      for (const std::string& b : cfg.baselines)
        if (b == "single_network")
          row.push_back(format_double(seed_mean({b, cfg.n_train_tasks.front(), m, 0})));
      for (std::size_t n : cfg.n_train_tasks)
        row.push_back(format_double(seed_mean({"pnn", n, m, l})));
      csv.row_cells(row);
    }
  }

  if (cfg.param_dims.size() > 1) {
    std::vector<std::string> header = {"n_train_tasks", "m_points", "param_dim"};
    for (std::uint64_t seed : cfg.seeds) header.push_back("seed_" + std::to_string(seed));
    header.push_back("mean");
    CsvWriter csv(manifest.add(fs::path("report") / "error_vs_param_dim.csv"), header);
    for (const Cell& cell : cells)
      for (std::size_t l : cfg.param_dims) {
        std::vector<std::string> row = {std::to_string(cell.n_train),
                                        std::to_string(cell.m_points), std::to_string(l)};
        const Key key{"pnn", cell.n_train, cell.m_points, l};
        for (std::uint64_t seed : cfg.seeds)
          row.push_back(format_double(summaries.at(key).at(seed).mean_ei));
        row.push_back(format_double(seed_mean(key)));
        csv.row_cells(row);
      }
  }

  // Projection sweeps and parameter scatters for the first cell.
  const Cell& first_cell = cells.front();
  const std::uint64_t first_seed = cfg.seeds.front();
  const fs::path first_dir = cell_dir(out, first_cell, first_seed);
  const TaskSet first_test =
      load_task_set(first_dir / "test_tasks.csv", first_dir / "test_truth.json");
  const Matrix2D sweep_grid =
      cfg.family == Family::Bond ? first_test.tasks.front().x : family_grid(cfg.family);

  for (std::size_t l : cfg.param_dims) {
    if (l == 0) continue;
    const std::string tag = "l" + std::to_string(l);
    const PnnModel model = load_pnn(first_dir / ("model_" + tag + ".json"));
    {
      std::vector<std::string> header = {"coord", "step", "param_value"};
      for (std::size_t c = 0; c < model.k1; ++c) header.push_back("x" + std::to_string(c));
      header.push_back("y");
      CsvWriter csv(manifest.add(fs::path("report") / ("projections_" + tag + ".csv")), header);
      const std::vector<double> base_p = model.params.row(0);
      for (std::size_t coord = 0; coord < l; ++coord) {
        const ProjectionSweep sweep = projection_sweep(model, base_p, coord, 9, sweep_grid);
        for (std::size_t s = 0; s < sweep.param_values.size(); ++s)
          for (std::size_t r = 0; r < sweep_grid.rows; ++r) {
            std::vector<std::string> row = {std::to_string(coord), std::to_string(s),
                                            format_double(sweep.param_values[s])};
            for (std::size_t c = 0; c < model.k1; ++c)
              row.push_back(format_double(sweep_grid(r, c)));
            row.push_back(format_double(sweep.curves[s](r, 0)));
            csv.row_cells(row);
          }
      }
    }

    const TaskSet first_train =
        load_task_set(first_dir / "train_tasks.csv", first_dir / "train_truth.json");
    for (std::uint64_t seed : cfg.seeds) {
      const fs::path dir = cell_dir(out, first_cell, seed);
      const PnnModel m = load_pnn(dir / ("model_" + tag + ".json"));
      std::vector<std::string> header = {"task_id"};
      for (std::size_t j = 0; j < l; ++j) header.push_back("p" + std::to_string(j));
      if (cfg.family == Family::Regime) header.push_back("regime");
      CsvWriter csv(manifest.add(fs::path("report") /
                                 ("param_scatter_" + tag + "_seed_" + std::to_string(seed) +
                                  ".csv")),
                    header);
      const TaskSet train = seed == first_seed
                                ? first_train
                                : load_task_set(dir / "train_tasks.csv", dir / "train_truth.json");
      for (std::size_t t = 0; t < m.params.n_tasks; ++t) {
        std::vector<std::string> row = {std::to_string(t)};
        for (std::size_t j = 0; j < l; ++j) row.push_back(format_double(m.params.values(t, j)));
        if (cfg.family == Family::Regime)
          row.push_back(
              std::to_string(std::get<RegimeParams>(train.tasks[t].truth.params).regime));
        csv.row_cells(row);
      }
    }

    if (cfg.family == Family::Regime) {
      CsvWriter csv(manifest.add(fs::path("report") / ("cluster_" + tag + ".csv")),
                    {"seed", "accuracy", "centroid_distance"});
      for (std::uint64_t seed : cfg.seeds) {
        const fs::path dir = cell_dir(out, first_cell, seed);
        const PnnModel m = load_pnn(dir / ("model_" + tag + ".json"));
        const TaskSet train =
            load_task_set(dir / "train_tasks.csv", dir / "train_truth.json");
        std::vector<int> labels;
        for (const TaskSample& task : train.tasks)
          labels.push_back(std::get<RegimeParams>(task.truth.params).regime);
        const ClusterResult cr = cluster_separation(m.params, labels, seed);
        csv.row(seed, cr.accuracy, cr.centroid_distance);
      }
    }

    if (cfg.family == Family::Bond) {
      std::vector<double> residuals, maturities;
      for (std::uint64_t seed : cfg.seeds) {
        const detail::CsvTable t = detail::read_csv(cell_dir(out, first_cell, seed) /
                                                    ("residuals_" + tag + ".csv"));
        const std::size_t cm = t.col("maturity_years"), cr = t.col("residual");
        for (const auto& row : t.rows) {
          maturities.push_back(std::stod(row[cm]));
          residuals.push_back(std::stod(row[cr]));
        }
      }
      const ErrorHistogram hist =
          error_histogram(residuals, maturities, cfg.maturity_split_years);
      CsvWriter csv(manifest.add(fs::path("report") / ("histogram_" + tag + ".csv")),
                    {"group", "bin_left_bp", "count"});
      for (const auto& [bin, count] : hist.short_bins)
        csv.row("short", static_cast<double>(bin) * hist.bin_width * 1e4, count);
      for (const auto& [bin, count] : hist.long_bins)
        csv.row("long", static_cast<double>(bin) * hist.bin_width * 1e4, count);
    }
  }

  manifest.finish();
  return result;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

struct GradCheckRun {
  std::uint64_t seed;
  GradCheckReport report;
};

// Seeded random models at the configured architecture, checked against
// central differences.
inline std::vector<GradCheckRun> run_gradcheck(const ExperimentConfig& cfg, const fs::path& out) {
  ManifestRecorder manifest("gradcheck", cfg, out);
  const std::size_t k1 = cfg.family == Family::Bond ? kBondFeatureDim
                         : cfg.family == Family::Interdep ? 2
                                                          : 1;
  std::vector<std::size_t> dims;
  dims.push_back(k1 + cfg.param_dims.front());
  dims.insert(dims.end(), cfg.hidden_layers.begin(), cfg.hidden_layers.end());
  dims.push_back(1);

  std::vector<GradCheckRun> runs;
  CsvWriter csv(manifest.add("gradcheck.csv"), {"seed", "max_rel_error", "pass"});
  for (std::uint64_t seed : cfg.seeds) {
    SplitMix64 rng = substream(seed, 0);
    const MlpModel model = make_mlp(dims, Activation::Selu, rng);
    Matrix2D batch(4, dims.front()), target(4, 1);
    for (double& v : batch.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : target.data) v = rng.uniform(-1.0, 1.0);
    GradCheckRun run{seed, grad_check(model, batch, target, 1e-6, 1e-5)};
    csv.row(seed, run.report.max_rel_error, run.report.pass ? 1 : 0);
    runs.push_back(std::move(run));
  }
  manifest.finish();
  return runs;
}

}  // namespace pnn
