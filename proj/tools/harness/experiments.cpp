#include "harness/experiments.hpp"

#include "qkdlab/security.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <span>
#include <thread>

namespace qkdlab::harness {

using json = nlohmann::ordered_json;

namespace {

json record_json(const CheckRecord& r) {
  json j = {{"pair", r.pair + 1}, {"basis", std::string(1, basis_char(r.basis))}, {"error", r.error_bit}};
  if (r.raw_local_outcomes) j["raw"] = {r.raw_local_outcomes->first, r.raw_local_outcomes->second};
  return j;
}

std::string error_bits(const std::vector<CheckRecord>& records) {
  std::string s;
  for (const auto& r : records) s += r.error_bit ? '1' : '0';
  return s;
}

double phi_plus_mass(const AttackState& state) {
  if (const auto* pure = std::get_if<PureAttackState>(&state)) return classicalize(*pure).probability(0);
  return std::get<BellDiagonalState>(state).probability(0);
}

BellDiagonalState as_bell_diagonal(const AttackState& state) {
  if (const auto* pure = std::get_if<PureAttackState>(&state)) return classicalize(*pure);
  return std::get<BellDiagonalState>(state);
}

double metric_number(const ReportRow& row, std::string_view name) {
  const Metric* m = row.find(name);
  if (!m) return 0.0;
  if (const auto* d = std::get_if<double>(&m->value)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&m->value)) return static_cast<double>(*i);
  return 0.0;
}

// Row k of a sift sweep compares its Monte Carlo pass probability with row k-1.
void mark_sift_step(ReportRow& row, const ReportRow* previous) {
  bool ok = true;
  if (previous) ok = metric_number(row, "pass_probability") <= metric_number(*previous, "pass_probability");
  row.metrics.push_back({"non_increasing", ok});
  row.flagged = row.flagged || !ok;
}

}  // namespace

ExperimentRunner::ExperimentRunner(ExperimentConfig config) : config_(std::move(config)) {
  if (!config_.attack) return;
  try {
    if (const auto* pure = std::get_if<PureAttackState>(&*config_.attack)) {
      fixed_state_ = *pure;
    } else if (const auto* named = std::get_if<NamedAttackSpec>(&*config_.attack)) {
      fixed_state_ = named_attack(named->attack, named->n_pairs);
    }
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("attack: ") + e.what());
  }
}

TrialResult ExperimentRunner::run_trial(std::uint64_t trial) const {
  const ExperimentConfig& cfg = config_;
  if (trial >= cfg.row_count()) throw ConfigError("trial " + std::to_string(trial) + " is outside the run");

  TrialResult out;
  ReportRow& row = out.row;
  row.experiment = std::string(experiment_name(cfg.experiment));
  row.trial = trial;
  row.seed = cfg.protocol.seed;
  row.substream = trial;
  row.version = std::string(kArtifactVersion);
  json& tr = out.transcript;
  tr = json::object();
  tr["experiment"] = row.experiment;
  tr["trial"] = trial;
  tr["seed"] = row.seed;

  const TrialStreams streams{cfg.protocol.seed, trial};
  auto attack_state = [&]() -> AttackState {
    if (fixed_state_) return *fixed_state_;
    const auto& spec = std::get<RandomAttackSpec>(*cfg.attack);
    CounterRng rng = streams.stream(Substream::attack);
    return random_attack(rng, spec.n_pairs, spec.eve_dim, spec.terms);
  };
  auto verification_plan = [&](std::size_t n_pairs) {
    const std::size_t k = cfg.checked_pairs ? cfg.checked_pairs : std::max<std::size_t>(1, n_pairs / 2);
    CounterRng plan_rng = streams.stream(Substream::plan);
    CounterRng basis_rng = streams.stream(Substream::basis);
    return random_check_plan(n_pairs, k, MeasurementMode::nonlocal, plan_rng, basis_rng);
  };

  switch (cfg.experiment) {
    case Experiment::run_protocol: {
      const AttackState state = attack_state();
      const ProtocolOutcome result = run_check_phase(state, cfg.protocol, streams);
      const std::size_t n_info = cfg.protocol.n_pairs_total - result.plan.size();
      CodeModel code = cfg.code ? CodeModel{cfg.code->t_x, cfg.code->t_z, n_info}
                                : CodeModel::for_error_rate(std::min(1.0, 2.0 * cfg.protocol.e_cor), n_info);
      code.t_x = std::min(code.t_x, n_info);
      code.t_z = std::min(code.t_z, n_info);
      const CodeResult corrected = apply_code(as_bell_diagonal(result.residual), code);
      row.metrics = {
          {"plan", result.plan.to_string()},
          {"outcomes", error_bits(result.records)},
          {"n_errors", static_cast<std::int64_t>(result.error_count)},
          {"error_rate", result.error_rate},
          {"accepted", result.accepted},
          {"fidelity", phi_plus_mass(result.residual)},
          {"final_fidelity", corrected.final_fidelity},
      };
      tr["plan"] = result.plan.to_string();
      tr["mode"] = mode_name(result.plan.mode());
      tr["records"] = json::array();
      for (const auto& r : result.records) tr["records"].push_back(record_json(r));
      tr["code"] = {{"t_x", code.t_x}, {"t_z", code.t_z}, {"n_info", code.n_info}};
      break;
    }
    case Experiment::verify_classicalization: {
      const AttackState state = attack_state();
      const auto& pure = std::get<PureAttackState>(state);
      const BellDiagonalState classical = classicalize(pure);
      const CheckPlan plan = verification_plan(pure.n_pairs());
      double worst = 0.0;
      for (auto mode : {MeasurementMode::nonlocal, MeasurementMode::local}) {
        const CheckPlan p = plan.with_mode(mode);
        const double dev = max_abs_difference(outcome_distribution(pure, p), outcome_distribution(classical, p));
        row.metrics.push_back({std::string(mode_name(mode)) + "_deviation", dev});
        worst = std::max(worst, dev);
      }
      row.metrics.insert(row.metrics.begin(), Metric{"plan", plan.to_string()});
      row.metrics.push_back({"max_abs_deviation", worst});
      row.flagged = !(worst <= cfg.tolerances.exact);
      tr["plan"] = plan.to_string();
      tr["distribution"] = outcome_distribution(pure, plan);
      break;
    }
    case Experiment::verify_local_equivalence: {
      const AttackState state = attack_state();
      const CheckPlan plan = verification_plan(n_pairs_of(state));
      const LocalEquivalenceReport report =
          std::visit([&](const auto& s) { return local_equivalence_report(s, plan); }, state);
      const double worst = report.max_deviation();
      row.metrics = {
          {"plan", plan.to_string()},
          {"distribution_deviation", report.distribution_deviation},
          {"nonlocal_state_deviation", report.nonlocal_state_deviation},
          {"local_state_deviation", report.local_state_deviation},
          {"max_abs_deviation", worst},
      };
      row.flagged = !(worst <= cfg.tolerances.exact);
      tr["plan"] = plan.to_string();
      tr["nonlocal_distribution"] = report.nonlocal_distribution;
      tr["local_distribution"] = report.local_distribution;
      break;
    }
    case Experiment::verify_security_bounds: {
      const AttackState state = attack_state();
      const auto& pure = std::get<PureAttackState>(state);
      const SecurityReport report = holevo_report(pure.joint());
      const double violation = report.max_violation();
      row.metrics = {
          {"S_AB", report.s_ab},
          {"S_E", report.s_e},
          {"chi", report.chi},
          {"fidelity", report.fidelity},
          {"entropy_bound", report.entropy_bound},
          {"max_abs_deviation", violation},
      };
      row.flagged = !(violation <= cfg.tolerances.entropy);
      tr["key_probabilities"] = report.key_probabilities;
      break;
    }
    case Experiment::sift_sweep: {
      const std::size_t m = cfg.sift.m_min + trial;
      const SiftEstimate mc = sift_probability(m, cfg.protocol, cfg.sift.kind);
      const SiftExact exact = exact_sift_probability(m, cfg.protocol, cfg.sift.kind);
      const double n = static_cast<double>(cfg.protocol.n_checked());
      const double limit = 2.0 * cfg.protocol.e_cor;
      double above_exact = 0.0;
      double above_mc = 0.0;
      for (std::size_t r = 0; r < exact.residual_distribution.size(); ++r)
        if (static_cast<double>(r) / n > limit + 1e-12) above_exact += exact.residual_distribution[r];
      for (std::size_t r = 0; r < mc.residual_distribution.size(); ++r)
        if (static_cast<double>(r) / n > limit + 1e-12) above_mc += mc.residual_distribution[r];
      const double p = exact.pass_probability;
      const double se = std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(cfg.protocol.trials));
      const double band = std::max(cfg.tolerances.sigma * se, cfg.tolerances.exact);
      const double deviation = std::abs(mc.pass_probability - p);
      row.metrics = {
          {"m", static_cast<std::int64_t>(m)},
          {"exceeds_threshold", exceeds_sift_threshold(m, cfg.protocol)},
          {"pass_probability", mc.pass_probability},
          {"pass_probability_exact", p},
          {"standard_error", se},
          {"abs_deviation", deviation},
          {"tolerance_band", band},
          {"residual_above_2e_cor", above_mc},
          {"residual_above_2e_cor_exact", above_exact},
      };
      row.flagged = !(deviation <= band);
      tr["kind"] = std::string(1, "IXYZ"[to_int(cfg.sift.kind)]);
      tr["passes"] = mc.passes;
      tr["mc_trials"] = mc.trials;
      tr["residual_distribution_exact"] = exact.residual_distribution;
      break;
    }
  }
  tr["metrics"] = row_to_json(row)["metrics"];
  tr["flagged"] = row.flagged;
  return out;
}

ExperimentResult ExperimentRunner::run() const {
  const std::size_t n_rows = config_.row_count();
  std::vector<ReportRow> rows(n_rows);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_rows) return;
      try {
        rows[i] = run_trial(i).row;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n_rows);
        return;
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(std::max<std::size_t>(config_.threads, 1), n_rows);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  if (config_.experiment == Experiment::sift_sweep)
    for (std::size_t i = 0; i < rows.size(); ++i) mark_sift_step(rows[i], i ? &rows[i - 1] : nullptr);

  ExperimentResult result;
  result.rows = std::move(rows);
  json flagged = json::array();
  double max_dev = 0.0;
  for (const auto& row : result.rows) {
    if (row.flagged) flagged.push_back(row.trial);
    max_dev = std::max(max_dev, metric_number(row, "max_abs_deviation"));
  }
  result.passed = flagged.empty();

  json suite = {{"passed", result.passed}, {"rows", result.rows.size()}, {"flagged_rows", flagged}};
  switch (config_.experiment) {
    case Experiment::run_protocol: {
      std::size_t accepted = 0;
      double error_sum = 0.0;
      for (const auto& row : result.rows) {
        accepted += std::get<bool>(row.find("accepted")->value) ? 1 : 0;
        error_sum += metric_number(row, "error_rate");
      }
      const double n = static_cast<double>(result.rows.size());
      suite["acceptance_rate"] = static_cast<double>(accepted) / n;
      suite["mean_error_rate"] = error_sum / n;
      break;
    }
    case Experiment::verify_classicalization:
    case Experiment::verify_local_equivalence:
    case Experiment::verify_security_bounds:
      suite["max_abs_deviation"] = max_dev;
      break;
    case Experiment::sift_sweep: {
      bool monotone = true;
      double max_ratio = 0.0;
      for (const auto& row : result.rows) {
        monotone = monotone && std::get<bool>(row.find("non_increasing")->value);
        const double band = metric_number(row, "tolerance_band");
        if (band > 0.0) max_ratio = std::max(max_ratio, metric_number(row, "abs_deviation") / band);
      }
      suite["monotone_non_increasing"] = monotone;
      suite["max_deviation_over_band"] = max_ratio;
      suite["mc_trials"] = config_.protocol.trials;
      break;
    }
  }

  const std::string name(experiment_name(config_.experiment));
  result.summary = {
      {"artifact_version", std::string(kArtifactVersion)},
      {"experiment", name},
      {"seed", config_.protocol.seed},
      {"passed", result.passed},
      {"tolerances",
       {{"exact", config_.tolerances.exact},
        {"entropy", config_.tolerances.entropy},
        {"sigma", config_.tolerances.sigma}}},
      {"suites", {{name, suite}}},
  };
  return result;
}

void write_reports(const ExperimentResult& result, const ExperimentConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + config.output_dir.string() + ": " + ec.message());
  const std::string stem(experiment_name(config.experiment));
  if (config.report_format != ReportFormat::json) write_text(config.output_dir / (stem + ".csv"), to_csv(result.rows));
  if (config.report_format != ReportFormat::csv)
    write_text(config.output_dir / (stem + ".json"), to_json(result.rows).dump(2) + "\n");
  write_text(config.output_dir / "summary.json", result.summary.dump(2) + "\n");
}

ReplayResult replay(const ExperimentConfig& config, const StoredRow& row, std::optional<std::uint64_t> seed) {
  if (row.version != kArtifactVersion)
    throw ConfigError("report version " + row.version + " does not match artifact version " +
                      std::string(kArtifactVersion));
  if (row.experiment != experiment_name(config.experiment))
    throw ConfigError("report row is from " + row.experiment + ", config runs " +
                      std::string(experiment_name(config.experiment)));
  ExperimentConfig cfg = config;
  cfg.protocol.seed = seed.value_or(row.seed);
  if (cfg.experiment != Experiment::sift_sweep) cfg.protocol.trials = std::max<std::size_t>(cfg.protocol.trials, row.trial + 1);
  const ExperimentRunner runner(cfg);

  ReplayResult out;
  out.trial = runner.run_trial(row.trial);
  if (cfg.experiment == Experiment::sift_sweep) {
    std::optional<ReportRow> previous;
    if (row.trial > 0) previous = runner.run_trial(row.trial - 1).row;
    mark_sift_step(out.trial.row, previous ? &*previous : nullptr);
    out.trial.transcript["metrics"] = row_to_json(out.trial.row)["metrics"];
    out.trial.transcript["flagged"] = out.trial.row.flagged;
  }

  const StoredRow fresh = stored_form(out.trial.row);
  for (const auto& [name, value] : row.metrics) {
    auto it = std::find_if(fresh.metrics.begin(), fresh.metrics.end(), [&](const auto& m) { return m.first == name; });
    if (it == fresh.metrics.end()) out.mismatches.push_back(name + ": missing from replay");
    else if (it->second != value) out.mismatches.push_back(name + ": report " + value + ", replay " + it->second);
  }
  if (fresh.metrics.size() != row.metrics.size()) out.mismatches.push_back("metric set differs");
  if (fresh.flagged != row.flagged) out.mismatches.push_back("flagged differs");
  out.exit_code = out.mismatches.empty() ? kExitOk : kExitVerification;
  return out;
}

}  // namespace qkdlab::harness
