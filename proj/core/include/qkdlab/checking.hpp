#pragma once

// The checking phase.
//
// Nonlocal mode measures M_Z = {P_0, P_1} or M_X = {Pbar_0, Pbar_1} on a pair:
//   P_0    = |Phi+><Phi+| + |Phi-><Phi-|  = |00><00| + |11><11|
//   Pbar_0 = |Phi+><Phi+| + |Psi+><Psi+|  = |++><++| + |--><--|
// and outcome 1 is an error. Local mode has Alice and Bob each measure their qubit
// in the Z or X basis; the error bit is the XOR of their outcomes.
//
// Outcome indices: an error-bit string is read with the first checked pair as the
// most significant bit. A raw local outcome string uses one base-4 digit 2a + b per
// checked pair, first checked pair most significant.

#include "qkdlab/attack_model.hpp"
#include "qkdlab/bell_algebra.hpp"
#include "qkdlab/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qkdlab {

enum class CheckBasis : std::uint8_t { Z, X };
enum class MeasurementMode : std::uint8_t { nonlocal, local };

char basis_char(CheckBasis b) noexcept;
const char* mode_name(MeasurementMode m) noexcept;

struct CheckedPair {
  std::size_t pair;  // 0-based
  CheckBasis basis;
  friend bool operator==(const CheckedPair&, const CheckedPair&) = default;
};

class CheckPlan {
 public:
  explicit CheckPlan(std::vector<CheckedPair> pairs, MeasurementMode mode = MeasurementMode::nonlocal);

  const std::vector<CheckedPair>& pairs() const noexcept { return pairs_; }
  MeasurementMode mode() const noexcept { return mode_; }
  std::size_t size() const noexcept { return pairs_.size(); }

  /// Throws std::domain_error unless the plan is non-empty with distinct pairs below n_pairs.
  void validate(std::size_t n_pairs) const;
  std::vector<std::size_t> unchecked(std::size_t n_pairs) const;
  CheckPlan with_mode(MeasurementMode mode) const { return CheckPlan(pairs_, mode); }

  /// "1Z 3X" with 1-based pair numbers.
  std::string to_string() const;

  friend bool operator==(const CheckPlan&, const CheckPlan&) = default;

 private:
  std::vector<CheckedPair> pairs_;
  MeasurementMode mode_;
};

/// Error bit of Bell vector k under M_Z (k in {X, Y}) or M_X (k in {Y, Z}).
int error_bit(Pauli k, CheckBasis basis) noexcept;

/// P_e (Z) or Pbar_e (X), built from the single-qubit basis vectors.
Eigen::Matrix4cd check_projector(CheckBasis basis, int error);
/// |a b><a b| in the given single-qubit basis.
Eigen::Matrix4cd local_projector(CheckBasis basis, int alice, int bob);

struct CheckRecord {
  std::size_t pair;
  CheckBasis basis;
  int error_bit;
  std::optional<std::pair<int, int>> raw_local_outcomes;
};

struct ProtocolConfig {
  std::size_t n_pairs_total = 2;  // 2n
  double e_check = 0.0;
  double e_cor = 0.0;
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  MeasurementMode mode = MeasurementMode::nonlocal;

  std::size_t n_checked() const noexcept { return n_pairs_total / 2; }
  /// Throws std::domain_error unless 2n is even and positive, 0 <= e_check < e_cor, trials > 0.
  void validate() const;
};

/// error_count / n_checked <= e_check.
bool check_passes(std::size_t error_count, std::size_t n_checked, double e_check) noexcept;

using AttackState = std::variant<PureAttackState, BellDiagonalState>;

std::size_t n_pairs_of(const AttackState& state);

using OutcomeDistribution = std::vector<double>;

/// Exact distribution of error-bit strings (2^c entries). In local mode the raw
/// outcome distribution is marginalized to error bits.
OutcomeDistribution outcome_distribution(const PureAttackState& state, const CheckPlan& plan);
OutcomeDistribution outcome_distribution(const BellDiagonalState& state, const CheckPlan& plan);
OutcomeDistribution outcome_distribution(const AttackState& state, const CheckPlan& plan);

/// Exact distribution of raw local outcome strings (4^c entries); ignores plan.mode().
std::vector<double> raw_local_distribution(const PureAttackState& state, const CheckPlan& plan);
std::vector<double> raw_local_distribution(const BellDiagonalState& state, const CheckPlan& plan);

/// Error-bit string of a raw local outcome index.
std::size_t error_string_of_raw(std::size_t raw, std::size_t n_checked) noexcept;

/// Bit string, most significant (first checked pair) first.
std::string outcome_label(std::size_t outcome, std::size_t n_bits);

/// Post-measurement state for a given outcome: an error-bit string in nonlocal mode,
/// a raw outcome string in local mode. Pure states keep the amplitudes compatible with
/// the outcome; Bell-diagonal states keep the compatible weights (in local mode the
/// weights are the pattern posterior, which is exact on every unchecked pair).
/// Throws std::domain_error for a zero-probability outcome.
AttackState collapse(const AttackState& state, const CheckPlan& plan, std::size_t outcome);

/// Drops the checked pairs. Pure states keep their purification: the discarded pairs
/// are folded into the environment register and the register is compressed to the
/// rank of the residual when that is smaller.
AttackState discard_checked(const AttackState& state, const CheckPlan& plan);

struct CheckSample {
  std::size_t outcome;  // error string (nonlocal) or raw string (local)
  std::size_t error_string;
  std::vector<CheckRecord> records;
  AttackState collapsed;
};

CheckSample sample_check(const AttackState& state, const CheckPlan& plan, CounterRng& rng);

struct ProtocolOutcome {
  CheckPlan plan;
  std::vector<CheckRecord> records;
  std::size_t error_count = 0;
  double error_rate = 0.0;
  bool accepted = false;
  AttackState residual;
};

/// Uniform n-subset of the 2n pairs (plan substream), uniform Z/X per checked pair
/// (basis substream), outcome sampling (outcome substream).
CheckPlan random_check_plan(std::size_t n_pairs, std::size_t n_checked, MeasurementMode mode,
                            CounterRng& plan_rng, CounterRng& basis_rng);

ProtocolOutcome run_check_phase(const AttackState& state, const ProtocolConfig& config, const TrialStreams& streams);

struct LocalEquivalenceReport {
  OutcomeDistribution nonlocal_distribution;
  OutcomeDistribution local_distribution;
  double distribution_deviation = 0.0;

  Eigen::MatrixXcd info_before;
  Eigen::MatrixXcd info_after_nonlocal;
  Eigen::MatrixXcd info_after_local;
  double nonlocal_state_deviation = 0.0;
  double local_state_deviation = 0.0;

  double max_deviation() const noexcept;
  bool holds(double tolerance) const noexcept { return max_deviation() <= tolerance; }
};

/// Compares nonlocal and local checking on the same plan (plan.mode() is ignored):
/// error-bit distributions, and the information-pair reduced state before measurement
/// against the outcome-averaged state after it.
LocalEquivalenceReport local_equivalence_report(const PureAttackState& state, const CheckPlan& plan);
LocalEquivalenceReport local_equivalence_report(const BellDiagonalState& state, const CheckPlan& plan);

double max_abs_difference(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace qkdlab
