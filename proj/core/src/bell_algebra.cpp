#include "qkdlab/bell_algebra.hpp"

#include <cmath>
#include <stdexcept>

namespace qkdlab {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr std::size_t kMaxPairs = 31;

// Applies a 4x4 matrix to every pair digit of each column.
Eigen::MatrixXcd apply_per_pair(const Eigen::MatrixXcd& columns, const Eigen::Matrix4cd& u) {
  const auto rows = static_cast<std::size_t>(columns.rows());
  const std::size_t n_pairs = pairs_for_length(rows);
  Eigen::MatrixXcd out = columns;
  for (std::size_t pair = 0; pair < n_pairs; ++pair) {
    const std::size_t stride = std::size_t{1} << (2 * (n_pairs - 1 - pair));
    const std::size_t block = 4 * stride;
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      auto col = out.col(c);
      for (std::size_t base = 0; base < rows; base += block) {
        for (std::size_t off = 0; off < stride; ++off) {
          Eigen::Vector4cd v;
          for (int d = 0; d < 4; ++d) {
            v(d) = col(static_cast<Eigen::Index>(base + off + d * stride));
          }
          const Eigen::Vector4cd w = u * v;
          for (int d = 0; d < 4; ++d) {
            col(static_cast<Eigen::Index>(base + off + d * stride)) = w(d);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

Pauli pauli_from_int(int value) {
  if (value < 0 || value > 3) {
    throw std::domain_error("Pauli index must be in {0,1,2,3}, got " + std::to_string(value));
  }
  return static_cast<Pauli>(value);
}

PauliPattern::PauliPattern(std::vector<Pauli> entries) : entries_(std::move(entries)) {
  for (Pauli p : entries_) {
    pauli_from_int(to_int(p));
  }
}

PauliPattern PauliPattern::identity(std::size_t n_pairs) {
  return PauliPattern(std::vector<Pauli>(n_pairs, Pauli::I));
}

PauliPattern PauliPattern::from_string(std::string_view digits) {
  std::vector<Pauli> entries;
  entries.reserve(digits.size());
  for (char c : digits) {
    if (c < '0' || c > '3') {
      throw std::domain_error("pattern digits must be base-4, got '" + std::string(digits) + "'");
    }
    entries.push_back(static_cast<Pauli>(c - '0'));
  }
  return PauliPattern(std::move(entries));
}

PauliPattern PauliPattern::from_index(std::uint64_t index, std::size_t n_pairs) {
  if (index >= pattern_space_size(n_pairs)) {
    throw std::domain_error("pattern index " + std::to_string(index) + " out of range for " +
                            std::to_string(n_pairs) + " pairs");
  }
  std::vector<Pauli> entries(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    entries[i] = static_cast<Pauli>(pattern_digit(index, i, n_pairs));
  }
  return PauliPattern(std::move(entries));
}

std::uint64_t PauliPattern::index() const {
  pattern_space_size(entries_.size());
  std::uint64_t idx = 0;
  for (Pauli p : entries_) {
    idx = (idx << 2) | static_cast<std::uint64_t>(p);
  }
  return idx;
}

std::string PauliPattern::to_string() const {
  std::string s;
  s.reserve(entries_.size());
  for (Pauli p : entries_) {
    s.push_back(static_cast<char>('0' + to_int(p)));
  }
  return s;
}

std::uint64_t pattern_space_size(std::size_t n_pairs) {
  if (n_pairs > kMaxPairs) {
    throw std::domain_error("too many pairs for a 64-bit pattern index: " + std::to_string(n_pairs));
  }
  return std::uint64_t{1} << (2 * n_pairs);
}

std::size_t pairs_for_length(std::size_t length) {
  std::size_t pairs = 0;
  std::size_t size = 1;
  while (size < length && pairs <= kMaxPairs) {
    size <<= 2;
    ++pairs;
  }
  if (size != length) {
    throw std::domain_error("vector length " + std::to_string(length) + " is not a power of 4");
  }
  return pairs;
}

BellVector bell_state(Pauli k) {
  const cplx s{kInvSqrt2, 0.0};
  const cplx is{0.0, kInvSqrt2};
  switch (pauli_from_int(to_int(k))) {
    case Pauli::I: return {s, 0.0, 0.0, s};
    case Pauli::X: return {0.0, s, s, 0.0};
    case Pauli::Y: return {0.0, is, -is, 0.0};
    case Pauli::Z: return {s, 0.0, 0.0, -s};
  }
  throw std::domain_error("unreachable Pauli index");
}

Eigen::Matrix2cd pauli_matrix(Pauli k) {
  Eigen::Matrix2cd m;
  switch (pauli_from_int(to_int(k))) {
    case Pauli::I: m << 1.0, 0.0, 0.0, 1.0; break;
    case Pauli::X: m << 0.0, 1.0, 1.0, 0.0; break;
    case Pauli::Y: m << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0; break;
    case Pauli::Z: m << 1.0, 0.0, 0.0, -1.0; break;
  }
  return m;
}

std::array<Eigen::Vector2cd, 2> single_qubit_basis(Basis basis) {
  std::array<Eigen::Vector2cd, 2> v;
  switch (basis) {
    case Basis::Z:
      v[0] << 1.0, 0.0;
      v[1] << 0.0, 1.0;
      break;
    case Basis::X:
      v[0] << kInvSqrt2, kInvSqrt2;
      v[1] << kInvSqrt2, -kInvSqrt2;
      break;
    case Basis::Y:
      v[0] << kInvSqrt2, cplx(0.0, kInvSqrt2);
      v[1] << kInvSqrt2, cplx(0.0, -kInvSqrt2);
      break;
    default:
      throw std::domain_error("unknown single-qubit basis");
  }
  return v;
}

Eigen::Matrix4cd bell_basis_matrix() {
  Eigen::Matrix4cd b;
  for (int k = 0; k < 4; ++k) {
    const BellVector v = bell_state(static_cast<Pauli>(k));
    for (int r = 0; r < 4; ++r) {
      b(r, k) = v[static_cast<std::size_t>(r)];
    }
  }
  return b;
}

Eigen::MatrixXcd bell_to_computational(const Eigen::MatrixXcd& bell_columns) {
  return apply_per_pair(bell_columns, bell_basis_matrix());
}

Eigen::MatrixXcd computational_to_bell(const Eigen::MatrixXcd& computational_columns) {
  return apply_per_pair(computational_columns, bell_basis_matrix().adjoint());
}

Eigen::VectorXcd bell_to_computational(const Eigen::VectorXcd& bell_amplitudes) {
  return bell_to_computational(Eigen::MatrixXcd(bell_amplitudes)).col(0);
}

Eigen::VectorXcd computational_to_bell(const Eigen::VectorXcd& computational_amplitudes) {
  return computational_to_bell(Eigen::MatrixXcd(computational_amplitudes)).col(0);
}

}  // namespace qkdlab
