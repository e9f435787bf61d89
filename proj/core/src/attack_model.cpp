#include "qkdlab/attack_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace qkdlab {

namespace {

constexpr double kProbabilityTolerance = 1e-10;

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error(std::string(what) + " must lie in [0,1]");
  }
}

void check_eve_dim(std::size_t eve_dim) {
  if (eve_dim == 0 || eve_dim > kMaxEveDimension) {
    throw std::domain_error("Eve dimension must be in [1, " + std::to_string(kMaxEveDimension) + "], got " +
                            std::to_string(eve_dim));
  }
}

// Tensor product of the Bell vectors named by a pattern, computational basis.
Eigen::VectorXcd bell_product_vector(std::uint64_t index, std::size_t n_pairs) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(1);
  for (std::size_t pair = 0; pair < n_pairs; ++pair) {
    const BellVector b = bell_state(static_cast<Pauli>(pattern_digit(index, pair, n_pairs)));
    Eigen::VectorXcd next(v.size() * 4);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      for (int d = 0; d < 4; ++d) {
        next(i * 4 + d) = v(i) * b[static_cast<std::size_t>(d)];
      }
    }
    v = std::move(next);
  }
  return v;
}

BellDiagonalState product_distribution(const std::array<double, 4>& marginal, std::size_t n_pairs) {
  std::vector<BellDiagonalState::Entry> entries{{0, 1.0}};
  for (std::size_t pair = 0; pair < n_pairs; ++pair) {
    std::vector<BellDiagonalState::Entry> next;
    next.reserve(entries.size() * 4);
    for (const auto& e : entries) {
      for (std::uint64_t k = 0; k < 4; ++k) {
        if (marginal[k] > 0.0) {
          next.push_back({(e.index << 2) | k, e.probability * marginal[k]});
        }
      }
    }
    entries = std::move(next);
  }
  return BellDiagonalState(n_pairs, std::move(entries));
}

}  // namespace

std::string pair_label(std::size_t pair) { return "pair-" + std::to_string(pair + 1); }

SubsystemLayout pair_layout(std::size_t n_pairs, std::size_t eve_dim) {
  std::vector<std::size_t> dims(n_pairs, 4);
  std::vector<std::string> labels;
  labels.reserve(n_pairs + 1);
  for (std::size_t i = 0; i < n_pairs; ++i) labels.push_back(pair_label(i));
  if (eve_dim > 0) {
    dims.push_back(eve_dim);
    labels.push_back(kEveLabel);
  }
  return SubsystemLayout(std::move(dims), std::move(labels));
}

PureAttackState::PureAttackState(std::size_t n_pairs, Eigen::MatrixXcd bell_amplitudes)
    : n_pairs_(n_pairs), amplitudes_(std::move(bell_amplitudes)) {
  if (n_pairs == 0) {
    throw std::domain_error("attack needs at least one pair");
  }
  if (static_cast<std::uint64_t>(amplitudes_.rows()) != pattern_space_size(n_pairs)) {
    throw std::domain_error("attack amplitude rows do not match 4^n_pairs");
  }
  if (amplitudes_.cols() < 1) {
    throw std::domain_error("attack needs an Eve dimension of at least 1");
  }
  if (static_cast<std::size_t>(amplitudes_.size()) > kMaxStateDimension) {
    throw std::domain_error("attack state exceeds the dense dimension limit");
  }
  const double norm = amplitudes_.norm();
  if (std::abs(norm - 1.0) > kStateTolerance) {
    throw std::domain_error("attack state is not normalized (norm " + std::to_string(norm) + ")");
  }
}

PureState PureAttackState::joint() const {
  const Eigen::MatrixXcd comp = bell_to_computational(amplitudes_);
  const Eigen::Index d = comp.cols();
  Eigen::VectorXcd v(comp.size());
  for (Eigen::Index r = 0; r < comp.rows(); ++r) {
    for (Eigen::Index j = 0; j < d; ++j) {
      v(r * d + j) = comp(r, j);
    }
  }
  return PureState(std::move(v), pair_layout(n_pairs_, static_cast<std::size_t>(d)));
}

PureAttackState PureAttackState::from_joint(const PureState& joint) {
  const auto& layout = joint.layout();
  if (layout.size() < 2) {
    throw std::domain_error("joint state must hold at least one pair and Eve");
  }
  const std::size_t n_pairs = layout.size() - 1;
  const std::size_t eve_dim = layout.dims().back();
  if (!(layout == pair_layout(n_pairs, eve_dim))) {
    throw std::domain_error("joint state layout is not [pair-1 .. pair-L, E]");
  }
  const auto rows = static_cast<Eigen::Index>(pattern_space_size(n_pairs));
  const auto d = static_cast<Eigen::Index>(eve_dim);
  Eigen::MatrixXcd comp(rows, d);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index j = 0; j < d; ++j) {
      comp(r, j) = joint.amplitudes()(r * d + j);
    }
  }
  return PureAttackState(n_pairs, computational_to_bell(comp));
}

BellDiagonalState::BellDiagonalState(std::size_t n_pairs, std::vector<Entry> entries) : n_pairs_(n_pairs) {
  const std::uint64_t space = pattern_space_size(n_pairs);
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.index < b.index; });
  double total = 0.0;
  for (const auto& e : entries) {
    if (e.index >= space) {
      throw std::domain_error("pattern index out of range in Bell-diagonal state");
    }
    if (!(e.probability >= 0.0)) {
      throw std::domain_error("negative probability in Bell-diagonal state");
    }
    total += e.probability;
    if (e.probability == 0.0) continue;
    if (!entries_.empty() && entries_.back().index == e.index) {
      entries_.back().probability += e.probability;
    } else {
      entries_.push_back(e);
    }
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    throw std::domain_error("Bell-diagonal probabilities sum to " + std::to_string(total));
  }
}

BellDiagonalState BellDiagonalState::delta(const PauliPattern& pattern) {
  return BellDiagonalState(pattern.size(), {{pattern.index(), 1.0}});
}

BellDiagonalState BellDiagonalState::from_dense(std::size_t n_pairs, std::span<const double> probabilities) {
  if (probabilities.size() != pattern_space_size(n_pairs)) {
    throw std::domain_error("dense distribution length does not match 4^n_pairs");
  }
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] != 0.0) entries.push_back({i, probabilities[i]});
  }
  return BellDiagonalState(n_pairs, std::move(entries));
}

double BellDiagonalState::probability(std::uint64_t index) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                                   [](const Entry& e, std::uint64_t i) { return e.index < i; });
  return (it != entries_.end() && it->index == index) ? it->probability : 0.0;
}

double BellDiagonalState::probability(const PauliPattern& pattern) const {
  if (pattern.size() != n_pairs_) {
    throw std::domain_error("pattern length does not match the state");
  }
  return probability(pattern.index());
}

std::vector<double> BellDiagonalState::dense() const {
  std::vector<double> out(pattern_space_size(n_pairs_), 0.0);
  for (const auto& e : entries_) out[e.index] = e.probability;
  return out;
}

PureAttackState assemble_attack(std::span<const AttackTerm> terms, std::size_t n_pairs, std::size_t eve_dim) {
  if (terms.empty()) {
    throw std::domain_error("attack needs at least one term");
  }
  check_eve_dim(eve_dim);
  const auto rows = static_cast<Eigen::Index>(pattern_space_size(n_pairs));
  Eigen::MatrixXcd amps = Eigen::MatrixXcd::Zero(rows, static_cast<Eigen::Index>(eve_dim));
  for (const auto& term : terms) {
    if (term.pattern.size() != n_pairs) {
      throw std::domain_error("term pattern '" + term.pattern.to_string() + "' does not have " +
                              std::to_string(n_pairs) + " pairs");
    }
    if (static_cast<std::size_t>(term.eve_state.size()) != eve_dim) {
      throw std::domain_error("Eve state dimension does not match eve_dim");
    }
    const double eve_norm = term.eve_state.norm();
    if (std::abs(eve_norm - 1.0) > kInputNormTolerance) {
      throw std::domain_error("Eve state is not normalized (norm " + std::to_string(eve_norm) + ")");
    }
    amps.row(static_cast<Eigen::Index>(term.pattern.index())) +=
        term.coeff * term.eve_state.transpose() / eve_norm;
  }
  const double norm = amps.norm();
  if (std::abs(norm - 1.0) > kInputNormTolerance) {
    throw std::domain_error("attack coefficients are not normalized (norm " + std::to_string(norm) + ")");
  }
  amps /= norm;
  return PureAttackState(n_pairs, std::move(amps));
}

BellDiagonalState classicalize(const PureAttackState& attack) {
  const Eigen::MatrixXcd& amps = attack.bell_amplitudes();
  std::vector<BellDiagonalState::Entry> entries;
  for (Eigen::Index r = 0; r < amps.rows(); ++r) {
    const double w = amps.row(r).squaredNorm();
    if (w > 0.0) entries.push_back({static_cast<std::uint64_t>(r), w});
  }
  return BellDiagonalState(attack.n_pairs(), std::move(entries));
}

std::array<double, 4> pair_marginal(const InterceptResend& attack) {
  check_probability(attack.fraction, "intercept fraction");
  // Measuring Bob's half of |Phi+> and resending: Z basis leaves (Phi+ + Phi-)/2,
  // X basis leaves (Phi+ + Psi+)/2.
  std::array<double, 4> intercepted{};
  switch (attack.basis) {
    case InterceptResend::ResendBasis::Z: intercepted = {0.5, 0.0, 0.0, 0.5}; break;
    case InterceptResend::ResendBasis::X: intercepted = {0.5, 0.5, 0.0, 0.0}; break;
    case InterceptResend::ResendBasis::random: intercepted = {0.5, 0.25, 0.0, 0.25}; break;
  }
  const double f = attack.fraction;
  std::array<double, 4> m{};
  for (std::size_t k = 0; k < 4; ++k) m[k] = f * intercepted[k];
  m[0] += 1.0 - f;
  return m;
}

std::array<double, 4> pair_marginal(const PauliChannel& attack) {
  check_probability(attack.p_x, "p_x");
  check_probability(attack.p_y, "p_y");
  check_probability(attack.p_z, "p_z");
  const double total = attack.p_x + attack.p_y + attack.p_z;
  if (total > 1.0 + kProbabilityTolerance) {
    throw std::domain_error("p_x + p_y + p_z exceeds 1");
  }
  return {std::max(0.0, 1.0 - total), attack.p_x, attack.p_y, attack.p_z};
}

BellDiagonalState named_attack(const NamedAttack& attack, std::size_t n_pairs) {
  if (n_pairs == 0) {
    throw std::domain_error("attack needs at least one pair");
  }
  return std::visit(
      [n_pairs](const auto& a) -> BellDiagonalState {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, NoAttack>) {
          return BellDiagonalState::delta(PauliPattern::identity(n_pairs));
        } else if constexpr (std::is_same_v<T, BellFlip>) {
          if (a.pattern.size() != n_pairs) {
            throw std::domain_error("bell_flip pattern length does not match n_pairs");
          }
          return BellDiagonalState::delta(a.pattern);
        } else {
          return product_distribution(pair_marginal(a), n_pairs);
        }
      },
      attack);
}

cplx complex_gaussian(CounterRng& rng) {
  // 1 - u keeps the logarithm finite.
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  const double r = std::sqrt(-std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

Eigen::VectorXcd random_unit_vector(CounterRng& rng, std::size_t dim) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(dim));
  for (auto& x : v) x = complex_gaussian(rng);
  return v / v.norm();
}

PureAttackState random_attack(CounterRng& rng, std::size_t n_pairs, std::size_t eve_dim, std::size_t n_terms) {
  if (n_terms == 0) {
    throw std::domain_error("random attack needs at least one term");
  }
  check_eve_dim(eve_dim);
  const std::uint64_t space = pattern_space_size(n_pairs);
  Eigen::MatrixXcd amps =
      Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(space), static_cast<Eigen::Index>(eve_dim));
  for (std::size_t t = 0; t < n_terms; ++t) {
    const auto row = static_cast<Eigen::Index>(rng.below(space));
    const cplx c = complex_gaussian(rng);
    amps.row(row) += c * random_unit_vector(rng, eve_dim).transpose();
  }
  amps /= amps.norm();
  return PureAttackState(n_pairs, std::move(amps));
}

DensityOperator density_operator_of(const PureAttackState& attack, Keep keep) {
  if (keep == Keep::ABE) {
    return DensityOperator::projector(attack.joint());
  }
  const Eigen::MatrixXcd comp = bell_to_computational(attack.bell_amplitudes());
  if (static_cast<std::size_t>(comp.rows()) > kMaxDensityDimension) {
    throw std::domain_error("density operator dimension exceeds the dense limit");
  }
  return DensityOperator(comp * comp.adjoint(), pair_layout(attack.n_pairs()));
}

DensityOperator density_operator_of(const BellDiagonalState& state, Keep keep) {
  if (keep == Keep::ABE) {
    throw std::domain_error("a Bell-diagonal state carries no Eve subsystem");
  }
  const std::uint64_t dim = pattern_space_size(state.n_pairs());
  if (dim > kMaxDensityDimension) {
    throw std::domain_error("density operator dimension exceeds the dense limit");
  }
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
  for (const auto& e : state.entries()) {
    const Eigen::VectorXcd v = bell_product_vector(e.index, state.n_pairs());
    rho.noalias() += e.probability * (v * v.adjoint());
  }
  return DensityOperator(std::move(rho), pair_layout(state.n_pairs()));
}

}  // namespace qkdlab
