#pragma once

#include "qkdlab/attack_model.hpp"
#include "qkdlab/checking.hpp"
#include "qkdlab/distillation.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace qkdlab::harness {

inline constexpr std::string_view kArtifactVersion = "0.1.0";

/// Malformed or inconsistent configuration; maps to exit status 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment {
  run_protocol,
  verify_classicalization,
  verify_local_equivalence,
  verify_security_bounds,
  sift_sweep,
};

std::string_view experiment_name(Experiment e) noexcept;
std::optional<Experiment> experiment_from_name(std::string_view name) noexcept;

/// A fresh random attack per trial, drawn from the trial's attack substream.
struct RandomAttackSpec {
  std::size_t n_pairs = 2;
  std::size_t eve_dim = kDefaultEveDimension;
  std::size_t terms = 4;
};

struct NamedAttackSpec {
  NamedAttack attack;
  std::size_t n_pairs = 0;
};

using AttackSpec = std::variant<PureAttackState, NamedAttackSpec, RandomAttackSpec>;

/// Parses an attack description:
///   {"n_pairs", "eve_dim", "terms": [{"pattern", "coeff": [re, im], "eve_state": [[re, im], ...]}]}
///   {"named": {"kind": "none|intercept_resend|pauli_channel|bell_flip", "params": {...}}, "n_pairs"?}
///   {"random": {"n_pairs", "eve_dim", "terms"}}
/// `default_n_pairs` sizes named attacks without their own n_pairs (0 = required).
AttackSpec parse_attack(const nlohmann::json& j, std::size_t default_n_pairs = 0);

std::size_t attack_pairs(const AttackSpec& spec) noexcept;

struct Tolerances {
  double exact = 1e-10;    // identities
  double entropy = 1e-9;   // entropy equalities and inequalities
  double sigma = 3.0;      // Monte Carlo agreement, in standard errors
};

enum class ReportFormat { csv, json, both };

struct SiftSettings {
  Pauli kind = Pauli::X;
  std::size_t m_min = 0;
  std::optional<std::size_t> m_max;  // default: n_pairs_total
};

struct ExperimentConfig {
  Experiment experiment = Experiment::run_protocol;
  std::optional<AttackSpec> attack;
  ProtocolConfig protocol;
  std::optional<CodeModel> code;    // n_info filled in per run
  SiftSettings sift;
  std::size_t checked_pairs = 0;    // verify-* plans; 0 = half the pairs (at least 1)
  Tolerances tolerances;
  std::filesystem::path output_dir = "qkdlab-out";
  ReportFormat report_format = ReportFormat::both;
  std::size_t threads = 1;

  /// Number of report rows: protocol.trials, or the m range for sift-sweep.
  std::size_t row_count() const;
  std::size_t sift_m_max() const;
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw ConfigError.
/// `experiment` overrides (and must agree with) the file's "experiment" field.
ExperimentConfig parse_config(const nlohmann::json& j, std::optional<Experiment> experiment = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path, std::optional<Experiment> experiment = std::nullopt);

}  // namespace qkdlab::harness
