#include "harness/config.hpp"
#include "harness/experiments.hpp"
#include "harness/report.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

namespace h = qkdlab::harness;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "experiment configuration (JSON)")->required();
  cmd->add_option("--seed", o.seed, "master seed, overrides protocol.seed");
  cmd->add_option("--trials", o.trials, "trial count, overrides protocol.trials")->check(CLI::PositiveNumber);
}

void apply_overrides(h::ExperimentConfig& cfg, const Options& o) {
  if (o.seed) cfg.protocol.seed = *o.seed;
  if (o.trials) cfg.protocol.trials = *o.trials;
  if (o.out) cfg.output_dir = *o.out;
  if (o.threads) cfg.threads = *o.threads;
}

int run(h::Experiment experiment, const Options& o) {
  h::ExperimentConfig cfg = h::load_config(o.config, experiment);
  apply_overrides(cfg, o);
  const h::ExperimentRunner runner(cfg);
  const h::ExperimentResult result = runner.run();
  h::write_reports(result, cfg);
  std::size_t flagged = 0;
  for (const auto& row : result.rows) flagged += row.flagged ? 1 : 0;
  std::cout << h::experiment_name(experiment) << ": " << result.rows.size() << " rows, " << flagged << " flagged, "
            << (result.passed ? "passed" : "FAILED") << " -> " << cfg.output_dir.string() << "\n";
  return result.exit_code();
}

int run_replay(const Options& o, const std::string& report, std::uint64_t trial) {
  const auto rows = h::read_report(report);
  const h::StoredRow* row = nullptr;
  for (const auto& r : rows)
    if (r.trial == trial) row = &r;
  if (!row) throw h::ConfigError("report has no row for trial " + std::to_string(trial));
  auto experiment = h::experiment_from_name(row->experiment);
  if (!experiment) throw h::ConfigError("report row names unknown experiment " + row->experiment);
  h::ExperimentConfig cfg = h::load_config(o.config, experiment);
  if (o.trials) cfg.protocol.trials = *o.trials;
  const h::ReplayResult result = h::replay(cfg, *row, o.seed);
  std::cout << result.trial.transcript.dump(2) << "\n";
  if (result.mismatches.empty()) {
    std::cout << "replay matches report row " << trial << "\n";
  } else {
    for (const auto& m : result.mismatches) std::cerr << "mismatch: " << m << "\n";
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qkdlab: entanglement-distillation QKD security simulator"};
  app.require_subcommand(1);
  Options opts;

  for (auto e : {h::Experiment::run_protocol, h::Experiment::verify_classicalization,
                 h::Experiment::verify_local_equivalence, h::Experiment::verify_security_bounds,
                 h::Experiment::sift_sweep}) {
    auto* cmd = app.add_subcommand(std::string(h::experiment_name(e)));
    add_common(cmd, opts);
    cmd->add_option("--out", opts.out, "report directory, overrides output_dir");
    cmd->add_option("--threads", opts.threads, "worker threads")->check(CLI::Range(1, 256));
  }
  std::string report;
  std::uint64_t trial = 0;
  auto* replay_cmd = app.add_subcommand("replay", "re-run one report row and compare its metrics");
  add_common(replay_cmd, opts);
  replay_cmd->add_option("--report", report, "CSV or JSON report")->required();
  replay_cmd->add_option("--trial", trial, "trial index of the row")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? h::kExitOk : h::kExitConfig;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "replay") return run_replay(opts, report, trial);
    return run(*h::experiment_from_name(name), opts);
  } catch (const h::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return h::kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return h::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return h::kExitConfig;
  }
}
