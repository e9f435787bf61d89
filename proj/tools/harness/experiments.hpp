#pragma once

#include "harness/config.hpp"
#include "harness/report.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qkdlab::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitVerification = 2;

struct TrialResult {
  ReportRow row;
  /// Plan, outcomes and anything else needed to debug the trial.
  nlohmann::ordered_json transcript;
};

struct ExperimentResult {
  std::vector<ReportRow> rows;
  nlohmann::ordered_json summary;
  bool passed = true;

  int exit_code() const noexcept { return passed ? kExitOk : kExitVerification; }
};

/// Runs the configured suite. Trials are independent; with config.threads > 1
/// they run on worker threads and are merged by trial index, so the rows do not
/// depend on the thread count.
class ExperimentRunner {
 public:
  /// Throws ConfigError if the configuration cannot be run.
  explicit ExperimentRunner(ExperimentConfig config);

  const ExperimentConfig& config() const noexcept { return config_; }

  /// One report row. For sift-sweep `trial` indexes m = m_min + trial.
  TrialResult run_trial(std::uint64_t trial) const;
  ExperimentResult run() const;

 private:
  ExperimentConfig config_;
  std::optional<AttackState> fixed_state_;  // attacks that do not vary per trial
};

/// Writes <experiment>.csv and/or <experiment>.json and summary.json into config.output_dir.
void write_reports(const ExperimentResult& result, const ExperimentConfig& config);

struct ReplayResult {
  TrialResult trial;
  std::vector<std::string> mismatches;
  int exit_code = kExitOk;
};

/// Re-executes the trial behind `row`. The caller supplies the configuration the
/// report came from; `seed` replaces the row's seed (negative controls).
/// Version mismatch throws ConfigError.
ReplayResult replay(const ExperimentConfig& config, const StoredRow& row, std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace qkdlab::harness
