#include "qkdlab/security.hpp"

#include "qkdlab/bell_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qkdlab {

namespace {

struct PartyPositions {
  std::vector<std::size_t> ab;
  std::vector<std::size_t> eve;
};

PartyPositions party_positions(const SubsystemLayout& layout, const std::vector<std::string>& eve_labels) {
  PartyPositions pp;
  pp.eve = layout.positions(eve_labels);
  std::sort(pp.eve.begin(), pp.eve.end());
  for (std::size_t p = 0; p < layout.size(); ++p) {
    if (!std::binary_search(pp.eve.begin(), pp.eve.end(), p)) pp.ab.push_back(p);
  }
  if (pp.eve.empty() || pp.ab.empty()) {
    throw std::domain_error("state must contain both Alice-Bob pairs and Eve subsystems");
  }
  for (std::size_t p : pp.ab) {
    if (layout.dims()[p] != 4) {
      throw std::domain_error("Alice-Bob subsystem '" + layout.labels()[p] + "' is not a qubit pair");
    }
  }
  return pp;
}

}  // namespace

KeyMeasurement alice_z_key(std::size_t n_pairs) {
  return KeyMeasurement{std::size_t{1} << n_pairs, [n_pairs](std::size_t ab_index) {
                          std::size_t key = 0;
                          for (std::size_t i = 0; i < n_pairs; ++i) {
                            const std::size_t digit = (ab_index >> (2 * (n_pairs - 1 - i))) & 3U;
                            key = (key << 1) | (digit >> 1);
                          }
                          return key;
                        }};
}

bool SecurityReport::invariants_hold(double tolerance) const noexcept { return max_violation() <= tolerance; }

double SecurityReport::max_violation() const noexcept {
  return std::max({std::abs(s_ab - s_e), -chi, chi - s_e, s_ab - entropy_bound, 0.0});
}

PureState phi_plus_product(const SubsystemLayout& ab_layout) {
  const BellVector phi = bell_state(Pauli::I);
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(1);
  for (std::size_t d : ab_layout.dims()) {
    if (d != 4) {
      throw std::domain_error("target layout must consist of qubit pairs");
    }
    Eigen::VectorXcd next(v.size() * 4);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      for (int k = 0; k < 4; ++k) next(i * 4 + k) = v(i) * phi[static_cast<std::size_t>(k)];
    }
    v = std::move(next);
  }
  return PureState(std::move(v), ab_layout);
}

SecurityReport holevo_report(const PureState& psi_abe, const std::vector<std::string>& eve_labels,
                             const std::optional<KeyMeasurement>& key) {
  const auto& layout = psi_abe.layout();
  const PartyPositions pp = party_positions(layout, eve_labels);
  const KeyMeasurement km = key ? *key : alice_z_key(pp.ab.size());
  if (km.n_values == 0 || !km.key_of) {
    throw std::domain_error("key measurement is empty");
  }

  // rows: AB computational index, columns: Eve index
  const Eigen::MatrixXcd m = split_matrix(psi_abe.amplitudes(), layout, pp.ab);
  const Eigen::MatrixXcd rho_ab = m * m.adjoint();
  const Eigen::MatrixXcd rho_e = m.transpose() * m.conjugate();

  SecurityReport report;
  report.s_ab = von_neumann_entropy(rho_ab);
  report.s_e = von_neumann_entropy(rho_e);

  std::vector<Eigen::MatrixXcd> conditional(km.n_values, Eigen::MatrixXcd::Zero(rho_e.rows(), rho_e.cols()));
  for (Eigen::Index a = 0; a < m.rows(); ++a) {
    const std::size_t x = km.key_of(static_cast<std::size_t>(a));
    if (x >= km.n_values) {
      throw std::domain_error("key measurement produced an out-of-range value");
    }
    const Eigen::VectorXcd e = m.row(a).transpose();
    conditional[x].noalias() += e * e.adjoint();
  }
  report.key_probabilities.resize(km.n_values);
  double conditional_entropy = 0.0;
  for (std::size_t x = 0; x < km.n_values; ++x) {
    const double px = conditional[x].trace().real();
    report.key_probabilities[x] = px;
    if (px > 0.0) conditional_entropy += px * von_neumann_entropy(conditional[x] / px);
  }
  report.chi = report.s_e - conditional_entropy;

  const PureState target = phi_plus_product(layout.select(pp.ab));
  const auto& t = target.amplitudes();
  report.fidelity = std::clamp((t.adjoint() * rho_ab * t)(0, 0).real(), 0.0, 1.0);
  report.entropy_bound = max_entropy_given_fidelity(report.fidelity, static_cast<std::size_t>(rho_ab.rows()));
  return report;
}

SecurityReport holevo_report(const DensityOperator& rho_abe, const std::vector<std::string>& eve_labels,
                             const std::optional<KeyMeasurement>& key) {
  const double purity = rho_abe.purity();
  if (purity < 1.0 - 1e-8) {
    throw std::domain_error("joint state is not pure (purity " + std::to_string(purity) + ")");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho_abe.matrix());
  const Eigen::Index top = es.eigenvalues().size() - 1;
  Eigen::VectorXcd v = es.eigenvectors().col(top);
  return holevo_report(PureState(v / v.norm(), rho_abe.layout()), eve_labels, key);
}

LabeledEnsemble::LabeledEnsemble(std::vector<EnsembleElement> elements) : elements_(std::move(elements)) {
  if (elements_.empty()) {
    throw std::domain_error("ensemble is empty");
  }
  double total = 0.0;
  for (const auto& el : elements_) {
    if (!(el.probability >= 0.0)) {
      throw std::domain_error("ensemble probability is negative");
    }
    if (!(el.state.layout() == elements_.front().state.layout())) {
      throw std::domain_error("ensemble elements have different layouts");
    }
    total += el.probability;
  }
  if (std::abs(total - 1.0) > 1e-10) {
    throw std::domain_error("ensemble probabilities sum to " + std::to_string(total));
  }
}

DensityOperator mix_ensemble(const LabeledEnsemble& ensemble, const std::vector<std::string>& eve_labels) {
  const auto& layout = ensemble.layout();
  const PartyPositions pp = party_positions(layout, eve_labels);
  const auto dim = static_cast<Eigen::Index>(layout.select(pp.ab).dimension());
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& el : ensemble.elements()) {
    rho += el.probability * reduce(el.state.amplitudes(), layout, pp.ab);
  }
  return DensityOperator(std::move(rho), layout.select(pp.ab));
}

FidelityDecomposition fidelity_decomposition_check(const LabeledEnsemble& ensemble, const PureState& target,
                                                   double epsilon, const std::vector<std::string>& eve_labels) {
  const auto& layout = ensemble.layout();
  const PartyPositions pp = party_positions(layout, eve_labels);
  if (target.dimension() != layout.select(pp.ab).dimension()) {
    throw std::domain_error("target dimension does not match the Alice-Bob system");
  }
  FidelityDecomposition out;
  out.epsilon = epsilon;
  const auto& t = target.amplitudes();
  for (const auto& el : ensemble.elements()) {
    const Eigen::MatrixXcd rho_i = reduce(el.state.amplitudes(), layout, pp.ab);
    const double f = (t.adjoint() * rho_i * t)(0, 0).real();
    out.term_fidelities.push_back(f);
    out.term_defects.push_back(el.probability * (1.0 - f));
    out.average_fidelity += el.probability * f;
  }
  out.mixture_fidelity = fidelity_to_pure(mix_ensemble(ensemble, eve_labels), target);
  out.identity_deviation = std::abs(out.mixture_fidelity - out.average_fidelity);
  out.precondition_met = out.mixture_fidelity >= 1.0 - epsilon - 1e-12;
  out.per_term_bound_holds = std::all_of(out.term_defects.begin(), out.term_defects.end(),
                                         [epsilon](double d) { return d <= epsilon + 1e-12; });
  out.terms_meeting_reversed_relation = static_cast<std::size_t>(std::count_if(
      out.term_defects.begin(), out.term_defects.end(), [epsilon](double d) { return d >= epsilon; }));
  return out;
}

PureState purify(const LabeledEnsemble& ensemble) {
  const auto& layout = ensemble.layout();
  const std::size_t n = ensemble.size();
  const auto d = static_cast<Eigen::Index>(layout.dimension());
  Eigen::VectorXcd v(static_cast<Eigen::Index>(n) * d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& el = ensemble.elements()[i];
    v.segment(static_cast<Eigen::Index>(i) * d, d) = std::sqrt(el.probability) * el.state.amplitudes();
  }
  const SubsystemLayout reg({n}, {kRegisterLabel});
  return PureState(std::move(v), reg.concat(layout));
}

RegisterMeasurementReport register_measurement_equivalence(const PureState& purified, const LabeledEnsemble& ensemble,
                                                           const std::vector<std::string>& eve_labels) {
  const std::size_t n = ensemble.size();
  const SubsystemLayout expected = SubsystemLayout({n}, {kRegisterLabel}).concat(ensemble.layout());
  if (!(purified.layout() == expected)) {
    throw std::domain_error("state was not built by purify() from this ensemble");
  }
  RegisterMeasurementReport out;
  const auto d = static_cast<Eigen::Index>(ensemble.layout().dimension());
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXcd block = purified.amplitudes().segment(static_cast<Eigen::Index>(i) * d, d);
    const double p = block.squaredNorm();
    out.outcome_probabilities.push_back(p);
    out.max_probability_deviation =
        std::max(out.max_probability_deviation, std::abs(p - ensemble.elements()[i].probability));
    double f = 0.0;
    if (p > 0.0) {
      f = std::norm(ensemble.elements()[i].state.amplitudes().dot(block / std::sqrt(p)));
    }
    out.conditional_fidelities.push_back(f);
  }

  std::vector<std::string> purified_eve = eve_labels;
  purified_eve.push_back(kRegisterLabel);
  const PartyPositions pp = party_positions(purified.layout(), purified_eve);
  out.purified_s_ab = von_neumann_entropy(reduce(purified.amplitudes(), purified.layout(), pp.ab));

  for (const auto& el : ensemble.elements()) {
    const double chi = holevo_report(el.state, eve_labels).chi;
    out.element_chi.push_back(chi);
    out.weighted_chi += el.probability * chi;
  }
  out.bound_holds = out.weighted_chi <= out.purified_s_ab + 1e-9;
  return out;
}

}  // namespace qkdlab
