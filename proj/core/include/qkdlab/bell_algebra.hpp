#pragma once

// Pauli operators, Bell vectors and the change of basis between the
// computational basis and the multi-pair Bell basis.
//
// Conventions used throughout qkdlab:
//   * Within a pair, Alice's qubit is the high bit: |ab> has index 2a + b.
//   * Bell vector k is (I (x) sigma_k)|Phi+>, so k = 2 carries a global phase i
//     (k = 2 maps to i|Psi->).
//   * A pattern over L pairs is read as a base-4 number with pair 1 as the most
//     significant digit. The computational index of L pairs uses the same order.

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qkdlab {

using cplx = std::complex<double>;

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

/// Throws std::domain_error unless 0 <= value <= 3.
Pauli pauli_from_int(int value);

constexpr int to_int(Pauli p) noexcept { return static_cast<int>(p); }

/// Single-qubit measurement bases.
enum class Basis : std::uint8_t { Z, X, Y };

/// A sequence of Pauli indices, one per qubit pair.
class PauliPattern {
 public:
  PauliPattern() = default;
  explicit PauliPattern(std::vector<Pauli> entries);

  static PauliPattern identity(std::size_t n_pairs);
  /// Parses base-4 digits, pair 1 first ("0310").
  static PauliPattern from_string(std::string_view digits);
  /// Inverse of index(). Throws std::domain_error if index >= 4^n_pairs.
  static PauliPattern from_index(std::uint64_t index, std::size_t n_pairs);

  std::uint64_t index() const;
  std::string to_string() const;

  std::size_t size() const noexcept { return entries_.size(); }
  Pauli operator[](std::size_t i) const { return entries_[i]; }
  std::span<const Pauli> entries() const noexcept { return entries_; }

  friend bool operator==(const PauliPattern&, const PauliPattern&) = default;

 private:
  std::vector<Pauli> entries_;
};

/// 4^n_pairs. Throws std::domain_error when the result would not fit in 62 bits.
std::uint64_t pattern_space_size(std::size_t n_pairs);

/// Number of pairs L with 4^L == length. Throws std::domain_error otherwise.
std::size_t pairs_for_length(std::size_t length);

/// Digit of pair `pair` (0-based, pair 0 most significant) in a pattern index.
constexpr int pattern_digit(std::uint64_t index, std::size_t pair, std::size_t n_pairs) noexcept {
  return static_cast<int>((index >> (2 * (n_pairs - 1 - pair))) & 3U);
}

/// Amplitudes of a Bell vector over |00>, |01>, |10>, |11>.
using BellVector = std::array<cplx, 4>;

BellVector bell_state(Pauli k);

Eigen::Matrix2cd pauli_matrix(Pauli k);

/// The two basis vectors of a single-qubit basis, outcome 0 first:
/// Z -> |0>,|1>;  X -> (|0> +- |1>)/sqrt2;  Y -> (|0> +- i|1>)/sqrt2.
std::array<Eigen::Vector2cd, 2> single_qubit_basis(Basis basis);

/// Unitary whose column k is bell_state(k).
Eigen::Matrix4cd bell_basis_matrix();

/// Maps Bell-pattern amplitudes over L pairs to computational amplitudes.
/// Throws std::domain_error if the length is not a power of 4.
Eigen::VectorXcd bell_to_computational(const Eigen::VectorXcd& bell_amplitudes);
Eigen::VectorXcd computational_to_bell(const Eigen::VectorXcd& computational_amplitudes);

/// Column-wise versions: every column is an independent vector over L pairs.
Eigen::MatrixXcd bell_to_computational(const Eigen::MatrixXcd& bell_columns);
Eigen::MatrixXcd computational_to_bell(const Eigen::MatrixXcd& computational_columns);

}  // namespace qkdlab
