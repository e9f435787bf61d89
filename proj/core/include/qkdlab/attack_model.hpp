#pragma once

// Eve's attack states.
//
// A PureAttackState stores the joint Alice-Bob-Eve state in the Bell basis: row
// `pattern index`, column `Eve basis index`. Row norms squared are the pattern
// weights |C_k|^2 (Eve states are normalized, Bell vectors orthonormal).
// A BellDiagonalState stores the sparse distribution P_k over patterns.

#include "qkdlab/bell_algebra.hpp"
#include "qkdlab/qstate.hpp"
#include "qkdlab/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace qkdlab {

inline constexpr std::size_t kDefaultEveDimension = 4;
inline constexpr std::size_t kMaxEveDimension = 16;
/// Input normalization slack; inputs within it are renormalized.
inline constexpr double kInputNormTolerance = 1e-8;

/// Label of pair i (0-based) in state layouts: "pair-1", "pair-2", ...
std::string pair_label(std::size_t pair);
inline const std::string kEveLabel = "E";

/// [pair-1 .. pair-L (dim 4 each)] followed by E (eve_dim) if eve_dim > 0.
SubsystemLayout pair_layout(std::size_t n_pairs, std::size_t eve_dim = 0);

struct AttackTerm {
  PauliPattern pattern;
  cplx coeff;
  Eigen::VectorXcd eve_state;
};

class PureAttackState {
 public:
  /// bell_amplitudes: 4^n_pairs rows, eve_dim columns, unit Frobenius norm (1e-10).
  PureAttackState(std::size_t n_pairs, Eigen::MatrixXcd bell_amplitudes);

  std::size_t n_pairs() const noexcept { return n_pairs_; }
  std::size_t eve_dim() const noexcept { return static_cast<std::size_t>(amplitudes_.cols()); }
  const Eigen::MatrixXcd& bell_amplitudes() const noexcept { return amplitudes_; }

  /// Joint state in the computational basis over pair_layout(n_pairs, eve_dim);
  /// index = computational index * eve_dim + Eve index.
  PureState joint() const;

  /// Inverse of joint(): any pure state over pair_layout(L, d) in that order.
  static PureAttackState from_joint(const PureState& joint);

 private:
  std::size_t n_pairs_;
  Eigen::MatrixXcd amplitudes_;
};

class BellDiagonalState {
 public:
  struct Entry {
    std::uint64_t index;
    double probability;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  /// Duplicate indices are merged, zero entries dropped. Throws std::domain_error
  /// for negative weights, out-of-range indices or a total off 1 by more than 1e-10.
  BellDiagonalState(std::size_t n_pairs, std::vector<Entry> entries);

  static BellDiagonalState delta(const PauliPattern& pattern);
  static BellDiagonalState from_dense(std::size_t n_pairs, std::span<const double> probabilities);

  std::size_t n_pairs() const noexcept { return n_pairs_; }
  /// Support, sorted by pattern index.
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  double probability(std::uint64_t index) const;
  double probability(const PauliPattern& pattern) const;
  std::vector<double> dense() const;

 private:
  std::size_t n_pairs_;
  std::vector<Entry> entries_;
};

/// Builds the Bell-basis attack state sum_k C_k sigma_k |Phi+>^L |E_k>. Amplitudes of
/// terms sharing a pattern add per Eve index. Eve states and the assembled state are
/// renormalized when within kInputNormTolerance of unit norm; otherwise rejected.
PureAttackState assemble_attack(std::span<const AttackTerm> terms, std::size_t n_pairs, std::size_t eve_dim);

/// P_k = sum_j |amplitude(k, j)|^2.
BellDiagonalState classicalize(const PureAttackState& attack);

struct NoAttack {};

/// Eve measures Bob's qubit of a pair with probability `fraction` and resends the
/// eigenstate she obtained. The basis is Z, X, or a fair coin between them.
struct InterceptResend {
  enum class ResendBasis { Z, X, random };
  double fraction = 1.0;
  ResendBasis basis = ResendBasis::random;
};

/// Independent Pauli error on Bob's qubit of each pair.
struct PauliChannel {
  double p_x = 0.0;
  double p_y = 0.0;
  double p_z = 0.0;
};

struct BellFlip {
  PauliPattern pattern;
};

using NamedAttack = std::variant<NoAttack, InterceptResend, PauliChannel, BellFlip>;

/// Per-pair Bell distribution (P_I, P_X, P_Y, P_Z) of the product families.
std::array<double, 4> pair_marginal(const InterceptResend& attack);
std::array<double, 4> pair_marginal(const PauliChannel& attack);

BellDiagonalState named_attack(const NamedAttack& attack, std::size_t n_pairs);

/// Random attack with `n_terms` terms on random distinct-or-repeated patterns,
/// complex Gaussian coefficients and Haar-random Eve states.
PureAttackState random_attack(CounterRng& rng, std::size_t n_pairs, std::size_t eve_dim, std::size_t n_terms);

enum class Keep { AB, ABE };

DensityOperator density_operator_of(const PureAttackState& attack, Keep keep);
/// sum_k P_k |B_k><B_k|. Throws std::domain_error for Keep::ABE.
DensityOperator density_operator_of(const BellDiagonalState& state, Keep keep = Keep::AB);

/// Complex standard normal (real and imaginary parts N(0, 1/2)) via Box-Muller.
cplx complex_gaussian(CounterRng& rng);
/// Haar-random unit vector.
Eigen::VectorXcd random_unit_vector(CounterRng& rng, std::size_t dim);

}  // namespace qkdlab
