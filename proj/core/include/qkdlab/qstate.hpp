#pragma once

// Dense pure states and density operators over labelled subsystems.
//
// Subsystem 0 of a layout is the most significant digit of the ambient index.
// Entropies are in bits. Fidelity to a pure target is the squared overlap
// <psi|rho|psi>, which is linear in rho.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace qkdlab {

/// Largest ambient dimension a dense state may have.
inline constexpr std::size_t kMaxStateDimension = std::size_t{1} << 14;
/// Largest dimension of a dense density operator (dim x dim complex entries).
inline constexpr std::size_t kMaxDensityDimension = std::size_t{1} << 11;

inline constexpr double kStateTolerance = 1e-10;

class SubsystemLayout {
 public:
  SubsystemLayout() = default;
  /// Throws std::domain_error on size mismatch, zero dimensions or duplicate labels.
  SubsystemLayout(std::vector<std::size_t> dims, std::vector<std::string> labels);

  std::size_t size() const noexcept { return dims_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  bool contains(const std::string& label) const;
  /// Throws std::domain_error for unknown labels.
  std::size_t position(const std::string& label) const;
  std::vector<std::size_t> positions(std::span<const std::string> labels) const;

  /// Layout made of the given positions, in the given order.
  SubsystemLayout select(std::span<const std::size_t> positions) const;
  /// Concatenation: this layout's subsystems first.
  SubsystemLayout concat(const SubsystemLayout& other) const;

  friend bool operator==(const SubsystemLayout&, const SubsystemLayout&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::string> labels_;
  std::size_t dimension_ = 1;
};

class PureState {
 public:
  /// Throws std::domain_error if the length does not match the layout or the norm
  /// differs from 1 by more than `tolerance`.
  PureState(Eigen::VectorXcd amplitudes, SubsystemLayout layout, double tolerance = kStateTolerance);

  const Eigen::VectorXcd& amplitudes() const noexcept { return amplitudes_; }
  const SubsystemLayout& layout() const noexcept { return layout_; }
  std::size_t dimension() const noexcept { return layout_.dimension(); }

 private:
  Eigen::VectorXcd amplitudes_;
  SubsystemLayout layout_;
};

class DensityOperator {
 public:
  /// Validates shape, Hermiticity and unit trace (both to `tolerance`). Positivity
  /// is not checked here because it needs an eigendecomposition; see min_eigenvalue().
  DensityOperator(Eigen::MatrixXcd matrix, SubsystemLayout layout, double tolerance = kStateTolerance);

  static DensityOperator projector(const PureState& psi);

  const Eigen::MatrixXcd& matrix() const noexcept { return matrix_; }
  const SubsystemLayout& layout() const noexcept { return layout_; }
  std::size_t dimension() const noexcept { return layout_.dimension(); }

  double min_eigenvalue() const;
  double purity() const;

 private:
  Eigen::MatrixXcd matrix_;
  SubsystemLayout layout_;
};

// --- kernels on raw vectors / matrices --------------------------------------

/// (op on subsystem `position`) applied to v.
Eigen::VectorXcd apply_local(const Eigen::VectorXcd& v, const SubsystemLayout& layout,
                             std::size_t position, const Eigen::MatrixXcd& op);

/// O rho O^dagger with O acting on subsystem `position`.
Eigen::MatrixXcd sandwich_local(const Eigen::MatrixXcd& rho, const SubsystemLayout& layout,
                                std::size_t position, const Eigen::MatrixXcd& op);

/// v reshaped to a matrix: rows index the subsystems at `row_positions` (in that
/// order), columns index the remaining subsystems in layout order.
Eigen::MatrixXcd split_matrix(const Eigen::VectorXcd& v, const SubsystemLayout& layout,
                              std::span<const std::size_t> row_positions);

/// tr_{not keep} |v><v|, unnormalized; kept subsystems appear in `keep` order.
Eigen::MatrixXcd reduce(const Eigen::VectorXcd& v, const SubsystemLayout& layout,
                        std::span<const std::size_t> keep);
Eigen::MatrixXcd reduce(const Eigen::MatrixXcd& rho, const SubsystemLayout& layout,
                        std::span<const std::size_t> keep);

// --- operations --------------------------------------------------------------

/// Reduced state on `keep`; the result layout lists kept subsystems in their
/// original order. Throws std::domain_error for an empty or unknown selection.
DensityOperator partial_trace(const PureState& psi, std::span<const std::string> keep);
DensityOperator partial_trace(const DensityOperator& rho, std::span<const std::string> keep);

/// Reorders subsystems; `order` must be a permutation of the layout labels.
PureState permute_subsystems(const PureState& psi, std::span<const std::string> order);

/// Shannon entropy (bits) of a spectrum; entries in [-1e-10, 0) are treated as 0.
double spectrum_entropy(std::span<const double> eigenvalues);

/// von Neumann entropy in bits. Throws std::domain_error if the matrix is not
/// Hermitian to 1e-10 or has an eigenvalue below -1e-10.
double von_neumann_entropy(const Eigen::MatrixXcd& rho);
double von_neumann_entropy(const DensityOperator& rho);

/// <psi|rho|psi>. Throws std::domain_error on dimension mismatch.
double fidelity_to_pure(const DensityOperator& rho, const PureState& psi);

double binary_entropy(double p);

/// max S(rho) over d-dimensional rho with <psi|rho|psi> = fidelity:
/// h(F) + (1 - F) log2(d - 1). Throws std::domain_error unless 0 <= F <= 1, d >= 2.
double max_entropy_given_fidelity(double fidelity, std::size_t dimension);

}  // namespace qkdlab
