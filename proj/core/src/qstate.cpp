#include "qkdlab/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qkdlab {

namespace {

constexpr double kEigenClip = 1e-10;

std::vector<std::size_t> strides_of(const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> strides(dims.size(), 1);
  for (std::size_t i = dims.size(); i-- > 1;) {
    strides[i - 1] = strides[i] * dims[i];
  }
  return strides;
}

// Mixed-radix index of the digits of `full` at `positions`, in that order.
struct IndexSplit {
  std::vector<std::size_t> kept;    // full index -> kept index
  std::vector<std::size_t> traced;  // full index -> traced index
  std::size_t kept_dim = 1;
  std::size_t traced_dim = 1;
};

IndexSplit split_indices(const SubsystemLayout& layout, std::span<const std::size_t> keep) {
  const auto& dims = layout.dims();
  std::vector<bool> is_kept(dims.size(), false);
  for (std::size_t p : keep) {
    if (p >= dims.size()) {
      throw std::domain_error("subsystem position out of range");
    }
    if (is_kept[p]) {
      throw std::domain_error("subsystem listed twice in partial trace");
    }
    is_kept[p] = true;
  }
  std::vector<std::size_t> traced_positions;
  for (std::size_t p = 0; p < dims.size(); ++p) {
    if (!is_kept[p]) traced_positions.push_back(p);
  }

  const auto strides = strides_of(dims);
  IndexSplit split;
  for (std::size_t p : keep) split.kept_dim *= dims[p];
  for (std::size_t p : traced_positions) split.traced_dim *= dims[p];

  const std::size_t total = layout.dimension();
  split.kept.resize(total);
  split.traced.resize(total);
  for (std::size_t full = 0; full < total; ++full) {
    std::size_t k = 0;
    for (std::size_t p : keep) k = k * dims[p] + (full / strides[p]) % dims[p];
    std::size_t t = 0;
    for (std::size_t p : traced_positions) t = t * dims[p] + (full / strides[p]) % dims[p];
    split.kept[full] = k;
    split.traced[full] = t;
  }
  return split;
}

void check_layout_dimension(Eigen::Index size, const SubsystemLayout& layout) {
  if (static_cast<std::size_t>(size) != layout.dimension()) {
    throw std::domain_error("state dimension " + std::to_string(size) +
                            " does not match layout dimension " + std::to_string(layout.dimension()));
  }
}

Eigen::MatrixXcd apply_local_columns(const Eigen::MatrixXcd& m, const SubsystemLayout& layout,
                                     std::size_t position, const Eigen::MatrixXcd& op) {
  check_layout_dimension(m.rows(), layout);
  if (position >= layout.size()) {
    throw std::domain_error("subsystem position out of range");
  }
  const std::size_t d = layout.dims()[position];
  if (static_cast<std::size_t>(op.rows()) != d || static_cast<std::size_t>(op.cols()) != d) {
    throw std::domain_error("local operator does not match subsystem dimension");
  }
  const std::size_t inner = strides_of(layout.dims())[position];
  const std::size_t block = inner * d;
  const std::size_t total = layout.dimension();

  Eigen::MatrixXcd out(m.rows(), m.cols());
  Eigen::VectorXcd in(static_cast<Eigen::Index>(d));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (std::size_t base = 0; base < total; base += block) {
      for (std::size_t off = 0; off < inner; ++off) {
        for (std::size_t j = 0; j < d; ++j) {
          in(static_cast<Eigen::Index>(j)) = m(static_cast<Eigen::Index>(base + off + j * inner), c);
        }
        const Eigen::VectorXcd r = op * in;
        for (std::size_t j = 0; j < d; ++j) {
          out(static_cast<Eigen::Index>(base + off + j * inner), c) = r(static_cast<Eigen::Index>(j));
        }
      }
    }
  }
  return out;
}

std::vector<std::size_t> ordered_positions(const SubsystemLayout& layout, std::span<const std::string> keep) {
  if (keep.empty()) {
    throw std::domain_error("partial trace must keep at least one subsystem");
  }
  auto positions = layout.positions(keep);
  std::sort(positions.begin(), positions.end());
  if (std::adjacent_find(positions.begin(), positions.end()) != positions.end()) {
    throw std::domain_error("subsystem listed twice in partial trace");
  }
  return positions;
}

}  // namespace

SubsystemLayout::SubsystemLayout(std::vector<std::size_t> dims, std::vector<std::string> labels)
    : dims_(std::move(dims)), labels_(std::move(labels)) {
  if (dims_.size() != labels_.size()) {
    throw std::domain_error("layout needs one label per subsystem");
  }
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i] == 0) {
      throw std::domain_error("subsystem '" + labels_[i] + "' has dimension 0");
    }
    if (dimension_ > (std::size_t{1} << 40) / dims_[i]) {
      throw std::domain_error("layout dimension overflow");
    }
    dimension_ *= dims_[i];
    for (std::size_t j = 0; j < i; ++j) {
      if (labels_[j] == labels_[i]) {
        throw std::domain_error("duplicate subsystem label '" + labels_[i] + "'");
      }
    }
  }
}

bool SubsystemLayout::contains(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::size_t SubsystemLayout::position(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) {
    throw std::domain_error("unknown subsystem label '" + label + "'");
  }
  return static_cast<std::size_t>(it - labels_.begin());
}

std::vector<std::size_t> SubsystemLayout::positions(std::span<const std::string> labels) const {
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(position(l));
  return out;
}

SubsystemLayout SubsystemLayout::select(std::span<const std::size_t> positions) const {
  std::vector<std::size_t> dims;
  std::vector<std::string> labels;
  for (std::size_t p : positions) {
    if (p >= dims_.size()) throw std::domain_error("subsystem position out of range");
    dims.push_back(dims_[p]);
    labels.push_back(labels_[p]);
  }
  return SubsystemLayout(std::move(dims), std::move(labels));
}

SubsystemLayout SubsystemLayout::concat(const SubsystemLayout& other) const {
  auto dims = dims_;
  auto labels = labels_;
  dims.insert(dims.end(), other.dims_.begin(), other.dims_.end());
  labels.insert(labels.end(), other.labels_.begin(), other.labels_.end());
  return SubsystemLayout(std::move(dims), std::move(labels));
}

PureState::PureState(Eigen::VectorXcd amplitudes, SubsystemLayout layout, double tolerance)
    : amplitudes_(std::move(amplitudes)), layout_(std::move(layout)) {
  check_layout_dimension(amplitudes_.size(), layout_);
  if (layout_.dimension() > kMaxStateDimension) {
    throw std::domain_error("state dimension exceeds the dense limit");
  }
  const double norm = amplitudes_.norm();
  if (std::abs(norm - 1.0) > tolerance) {
    throw std::domain_error("pure state is not normalized (norm " + std::to_string(norm) + ")");
  }
}

DensityOperator::DensityOperator(Eigen::MatrixXcd matrix, SubsystemLayout layout, double tolerance)
    : matrix_(std::move(matrix)), layout_(std::move(layout)) {
  if (matrix_.rows() != matrix_.cols()) {
    throw std::domain_error("density operator must be square");
  }
  check_layout_dimension(matrix_.rows(), layout_);
  if (layout_.dimension() > kMaxDensityDimension) {
    throw std::domain_error("density operator dimension exceeds the dense limit");
  }
  if ((matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() > tolerance) {
    throw std::domain_error("density operator is not Hermitian");
  }
  const double tr = matrix_.trace().real();
  if (std::abs(tr - 1.0) > tolerance) {
    throw std::domain_error("density operator trace is " + std::to_string(tr));
  }
}

DensityOperator DensityOperator::projector(const PureState& psi) {
  const auto& v = psi.amplitudes();
  return DensityOperator(v * v.adjoint(), psi.layout());
}

double DensityOperator::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(matrix_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double DensityOperator::purity() const {
  // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
  return matrix_.cwiseAbs2().sum();
}

Eigen::VectorXcd apply_local(const Eigen::VectorXcd& v, const SubsystemLayout& layout,
                             std::size_t position, const Eigen::MatrixXcd& op) {
  return apply_local_columns(Eigen::MatrixXcd(v), layout, position, op).col(0);
}

Eigen::MatrixXcd sandwich_local(const Eigen::MatrixXcd& rho, const SubsystemLayout& layout,
                                std::size_t position, const Eigen::MatrixXcd& op) {
  const Eigen::MatrixXcd left = apply_local_columns(rho, layout, position, op);
  const Eigen::MatrixXcd left_adj = left.adjoint();
  return apply_local_columns(left_adj, layout, position, op).adjoint();
}

Eigen::MatrixXcd split_matrix(const Eigen::VectorXcd& v, const SubsystemLayout& layout,
                              std::span<const std::size_t> row_positions) {
  check_layout_dimension(v.size(), layout);
  const IndexSplit split = split_indices(layout, row_positions);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(split.kept_dim),
                                              static_cast<Eigen::Index>(split.traced_dim));
  for (std::size_t full = 0; full < layout.dimension(); ++full) {
    m(static_cast<Eigen::Index>(split.kept[full]), static_cast<Eigen::Index>(split.traced[full])) =
        v(static_cast<Eigen::Index>(full));
  }
  return m;
}

Eigen::MatrixXcd reduce(const Eigen::VectorXcd& v, const SubsystemLayout& layout,
                        std::span<const std::size_t> keep) {
  const Eigen::MatrixXcd m = split_matrix(v, layout, keep);
  return m * m.adjoint();
}

Eigen::MatrixXcd reduce(const Eigen::MatrixXcd& rho, const SubsystemLayout& layout,
                        std::span<const std::size_t> keep) {
  check_layout_dimension(rho.rows(), layout);
  const IndexSplit split = split_indices(layout, keep);
  // full index of (kept, traced)
  std::vector<std::size_t> full_of(split.kept_dim * split.traced_dim);
  for (std::size_t full = 0; full < layout.dimension(); ++full) {
    full_of[split.kept[full] * split.traced_dim + split.traced[full]] = full;
  }
  const auto kd = static_cast<Eigen::Index>(split.kept_dim);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(kd, kd);
  for (std::size_t a = 0; a < split.kept_dim; ++a) {
    for (std::size_t b = 0; b < split.kept_dim; ++b) {
      std::complex<double> acc{0.0, 0.0};
      for (std::size_t t = 0; t < split.traced_dim; ++t) {
        acc += rho(static_cast<Eigen::Index>(full_of[a * split.traced_dim + t]),
                   static_cast<Eigen::Index>(full_of[b * split.traced_dim + t]));
      }
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc;
    }
  }
  return out;
}

DensityOperator partial_trace(const PureState& psi, std::span<const std::string> keep) {
  const auto positions = ordered_positions(psi.layout(), keep);
  return DensityOperator(reduce(psi.amplitudes(), psi.layout(), positions), psi.layout().select(positions));
}

DensityOperator partial_trace(const DensityOperator& rho, std::span<const std::string> keep) {
  const auto positions = ordered_positions(rho.layout(), keep);
  return DensityOperator(reduce(rho.matrix(), rho.layout(), positions), rho.layout().select(positions));
}

PureState permute_subsystems(const PureState& psi, std::span<const std::string> order) {
  const auto& layout = psi.layout();
  if (order.size() != layout.size()) {
    throw std::domain_error("permutation must list every subsystem exactly once");
  }
  const auto positions = layout.positions(order);
  const IndexSplit split = split_indices(layout, positions);
  Eigen::VectorXcd out(psi.amplitudes().size());
  for (std::size_t full = 0; full < layout.dimension(); ++full) {
    out(static_cast<Eigen::Index>(split.kept[full])) = psi.amplitudes()(static_cast<Eigen::Index>(full));
  }
  return PureState(std::move(out), layout.select(positions));
}

double spectrum_entropy(std::span<const double> eigenvalues) {
  double s = 0.0;
  for (double lambda : eigenvalues) {
    if (lambda < -kEigenClip) {
      throw std::domain_error("negative eigenvalue " + std::to_string(lambda) + " in entropy");
    }
    if (lambda > 0.0) {
      s -= lambda * std::log2(lambda);
    }
  }
  return s;
}

double von_neumann_entropy(const Eigen::MatrixXcd& rho) {
  if (rho.rows() != rho.cols()) {
    throw std::domain_error("entropy of a non-square matrix");
  }
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kStateTolerance) {
    throw std::domain_error("entropy of a non-Hermitian matrix");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  return spectrum_entropy(std::span<const double>(ev.data(), static_cast<std::size_t>(ev.size())));
}

double von_neumann_entropy(const DensityOperator& rho) { return von_neumann_entropy(rho.matrix()); }

double fidelity_to_pure(const DensityOperator& rho, const PureState& psi) {
  if (rho.dimension() != psi.dimension()) {
    throw std::domain_error("fidelity: dimension mismatch");
  }
  const auto& v = psi.amplitudes();
  return (v.adjoint() * rho.matrix() * v)(0, 0).real();
}

double binary_entropy(double p) {
  if (p < 0.0 || p > 1.0) {
    throw std::domain_error("binary entropy argument outside [0,1]");
  }
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

double max_entropy_given_fidelity(double fidelity, std::size_t dimension) {
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) {
    throw std::domain_error("fidelity must lie in [0,1]");
  }
  if (dimension < 2) {
    throw std::domain_error("dimension must be at least 2");
  }
  return binary_entropy(fidelity) + (1.0 - fidelity) * std::log2(static_cast<double>(dimension - 1));
}

}  // namespace qkdlab
