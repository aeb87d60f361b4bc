// Experiment runner for the parameterized-network library: generates task
// data, trains, recalibrates to held-out tasks, and emits plot-ready CSVs.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pnn/experiment.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kDivergence = 3,
  kMissingInputs = 4,
};

struct StageArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
};

void add_stage_options(CLI::App* cmd, StageArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "output directory (defaults to the config's out_dir)");
  cmd->add_option("--seed", args.seed_override, "override the config's seed list with one seed");
}

pnn::ExperimentConfig resolve(const StageArgs& args, std::string& out_dir) {
  pnn::ExperimentConfig cfg = pnn::load_config(args.config_path);
  if (args.seed_override) cfg.seeds = {*args.seed_override};
  out_dir = !args.out_dir.empty() ? args.out_dir : cfg.out_dir;
  if (out_dir.empty())
    throw pnn::ConfigError("no output directory: pass --out or set out_dir in the config");
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pnncli - parameterized neural network experiment runner"};
  app.require_subcommand(1);

  StageArgs gen_args, train_args, recalib_args, report_args, gradcheck_args;
  CLI::App* cmd_gen = app.add_subcommand("gen", "generate train/test task sets");
  add_stage_options(cmd_gen, gen_args);
  CLI::App* cmd_train = app.add_subcommand("train", "train models on generated tasks");
  add_stage_options(cmd_train, train_args);
  CLI::App* cmd_recalib =
      app.add_subcommand("recalib", "recalibrate to test tasks and measure errors");
  add_stage_options(cmd_recalib, recalib_args);
  CLI::App* cmd_report = app.add_subcommand("report", "aggregate results into table/figure CSVs");
  add_stage_options(cmd_report, report_args);
  CLI::App* cmd_gradcheck =
      app.add_subcommand("gradcheck", "check analytic gradients against finite differences");
  add_stage_options(cmd_gradcheck, gradcheck_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_gen->parsed()) {
      std::string out;
      const pnn::ExperimentConfig cfg = resolve(gen_args, out);
      pnn::run_gen(cfg, out);
      std::printf("gen: wrote task sets under %s\n", out.c_str());
    } else if (cmd_train->parsed()) {
      std::string out;
      const pnn::ExperimentConfig cfg = resolve(train_args, out);
      pnn::run_train(cfg, out);
      std::printf("train: wrote models under %s\n", out.c_str());
    } else if (cmd_recalib->parsed()) {
      std::string out;
      const pnn::ExperimentConfig cfg = resolve(recalib_args, out);
      pnn::run_recalib(cfg, out);
      std::printf("recalib: wrote error reports under %s\n", out.c_str());
    } else if (cmd_report->parsed()) {
      std::string out;
      const pnn::ExperimentConfig cfg = resolve(report_args, out);
      const pnn::ReportResult result = pnn::run_report(cfg, out);
      if (!result.missing.empty()) {
        std::fprintf(stderr, "report: %zu missing cell(s):\n", result.missing.size());
        for (const std::string& cell : result.missing)
          std::fprintf(stderr, "  missing %s\n", cell.c_str());
        return kMissingInputs;
      }
      std::printf("report: wrote tables under %s/report\n", out.c_str());
    } else if (cmd_gradcheck->parsed()) {
      std::string out;
      const pnn::ExperimentConfig cfg = resolve(gradcheck_args, out);
      bool all_pass = true;
      for (const pnn::GradCheckRun& run : pnn::run_gradcheck(cfg, out)) {
        const std::string verdict =
            run.report.pass ? std::string("pass") : "FAIL at " + run.report.worst;
        std::printf("seed %llu: max relative error %.3e (%s)\n",
                    static_cast<unsigned long long>(run.seed), run.report.max_rel_error,
                    verdict.c_str());
        all_pass = all_pass && run.report.pass;
      }
      return all_pass ? kOk : kFailure;
    }
  } catch (const pnn::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const pnn::DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return kDivergence;
  } catch (const pnn::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kMissingInputs;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}
