#pragma once

// Desk-scale model of the distillation / error-correction stage and of the
// sifting behaviour of the checking phase.
//
// Error correction is modelled by a correction radius: a Bell-diagonal pattern
// with at most t_x X-type entries ({X, Y}) and at most t_z Z-type entries ({Y, Z})
// is mapped to the all-identity pattern; any other pattern keeps its mass.

#include "qkdlab/attack_model.hpp"
#include "qkdlab/bell_algebra.hpp"
#include "qkdlab/checking.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace qkdlab {

struct ErrorTypeCounts {
  std::size_t x_type = 0;
  std::size_t z_type = 0;
  friend bool operator==(const ErrorTypeCounts&, const ErrorTypeCounts&) = default;
};

ErrorTypeCounts error_type_counts(const PauliPattern& pattern);
ErrorTypeCounts error_type_counts(std::uint64_t index, std::size_t n_pairs);

struct CodeModel {
  std::size_t t_x = 0;
  std::size_t t_z = 0;
  std::size_t n_info = 0;

  /// Throws std::domain_error unless t_x, t_z <= n_info.
  void validate() const;
  /// Radius floor(error_rate n_info) in both error types, capped at n_info.
  /// A code correcting up to rate 2 e_cor is for_error_rate(2 e_cor, n).
  static CodeModel for_error_rate(double error_rate, std::size_t n_info);
};

struct CodeResult {
  double final_fidelity = 0.0;
  BellDiagonalState corrected;
};

/// Throws std::domain_error when the state has a pair count other than code.n_info.
CodeResult apply_code(const BellDiagonalState& residual, const CodeModel& code);

/// 4n e_cor, i.e. (2n)(2 e_cor).
double sift_threshold(const ProtocolConfig& config) noexcept;
/// m > 4n e_cor, with a 1e-9 slack on the real-valued threshold.
bool exceeds_sift_threshold(std::size_t m_illegitimate, const ProtocolConfig& config) noexcept;

struct SiftEstimate {
  double pass_probability = 0.0;
  std::size_t passes = 0;
  std::size_t trials = 0;
  /// Entry r: P(r illegitimate pairs remain among the unchecked pairs | pass).
  /// All zero when no trial passed.
  std::vector<double> residual_distribution;

  double standard_error() const noexcept;
};

/// Monte Carlo of the checking phase on 2n pairs of which m are in the Bell state
/// `kind` and the rest are Phi+. Trial t draws from the sift substream of
/// (config.seed, t) and places the illegitimate pairs at positions 0..m-1, so runs
/// with different m share their random subsets and bases (common random numbers).
SiftEstimate sift_probability(std::size_t m_illegitimate, const ProtocolConfig& config, Pauli kind = Pauli::X);

struct SiftExact {
  double pass_probability = 0.0;
  /// Entry r: P(r illegitimate pairs remain among the unchecked pairs | pass).
  std::vector<double> residual_distribution;
  /// Entry r: P(r remain and pass) (unnormalized joint).
  std::vector<double> residual_joint;
};

/// Exact counterpart of sift_probability: hypergeometric number of checked
/// illegitimate pairs, then the per-pair detection law of `kind` under a uniform
/// Z/X basis choice.
SiftExact exact_sift_probability(std::size_t m_illegitimate, const ProtocolConfig& config, Pauli kind = Pauli::X);

struct ResidualPosterior {
  double pass_probability = 0.0;
  bool never_passes = false;
  /// ratio[r] = r / n, posterior[r] = P(residual count r | pass).
  std::vector<double> ratios;
  std::vector<double> posterior;
  /// P(residual ratio > 2 e_cor | pass).
  double mass_above_2e_cor = 0.0;
};

/// Bayes update of a prior over m (2n + 1 entries summing to 1) given that the check
/// passed. Throws std::domain_error for an invalid prior.
ResidualPosterior bayes_residual_bound(std::span<const double> prior, const ProtocolConfig& config,
                                       Pauli kind = Pauli::X);

/// log C(n, k).
double log_binomial(std::size_t n, std::size_t k);

}  // namespace qkdlab
