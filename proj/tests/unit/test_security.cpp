#include "qkdlab/security.hpp"

#include "qkdlab/attack_model.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

namespace qkdlab {
namespace {

using Strings = std::vector<std::string>;

Eigen::VectorXcd basis_vector(Eigen::Index d, Eigen::Index j) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
  v(j) = 1.0;
  return v;
}

PureState attack_joint(int n_pairs, const Eigen::MatrixXcd& c) {
  return PureAttackState(static_cast<std::size_t>(n_pairs), c).joint();
}

// chi of Alice's Z string against E, by dense projection of Alice's qubits.
double oracle_chi(const Eigen::VectorXcd& psi, int n_pairs, int eve_dim) {
  const int ab = 1 << (2 * n_pairs);
  std::vector<int> dims(static_cast<std::size_t>(2 * n_pairs), 2);
  dims.push_back(eve_dim);
  const int eve_pos = 2 * n_pairs;
  const Eigen::MatrixXcd rho = psi * psi.adjoint();
  double chi = oracle::entropy_bits(oracle::partial_trace(rho, dims, {eve_pos}));
  for (int x = 0; x < (1 << n_pairs); ++x) {
    // Projector |x><x| on Alice's qubits (the high bit of every pair).
    Eigen::VectorXcd mask = Eigen::VectorXcd::Zero(ab * eve_dim);
    for (int idx = 0; idx < ab; ++idx) {
      int key = 0;
      for (int p = 0; p < n_pairs; ++p) key = (key << 1) | ((idx >> (2 * (n_pairs - 1 - p) + 1)) & 1);
      if (key == x)
        for (int j = 0; j < eve_dim; ++j) mask(idx * eve_dim + j) = 1.0;
    }
    const Eigen::VectorXcd v = mask.cwiseProduct(psi);
    const double px = v.squaredNorm();
    if (px < 1e-15) continue;
    chi -= px * oracle::entropy_bits(oracle::partial_trace(v * v.adjoint() / px, dims, {eve_pos}));
  }
  return chi;
}

LabeledEnsemble random_ensemble(oracle::Random& rnd, std::size_t size, int n_pairs, int eve_dim) {
  std::vector<EnsembleElement> elements;
  std::vector<double> w(size);
  double s = 0.0;
  for (double& x : w) s += (x = rnd.uniform() + 0.05);
  for (std::size_t i = 0; i < size; ++i)
    elements.push_back({w[i] / s, attack_joint(n_pairs, rnd.sparse_attack(n_pairs, eve_dim, 1 + rnd.integer(0, 4)))});
  return LabeledEnsemble(std::move(elements));
}

TEST(HolevoReport, DecoupledEve) {
  std::vector<AttackTerm> terms{{PauliPattern::identity(2), 1.0, basis_vector(3, 1)}};
  const SecurityReport r = holevo_report(assemble_attack(terms, 2, 3).joint());
  EXPECT_NEAR(r.s_ab, 0.0, 1e-10);
  EXPECT_NEAR(r.s_e, 0.0, 1e-10);
  EXPECT_NEAR(r.chi, 0.0, 1e-10);
  EXPECT_NEAR(r.fidelity, 1.0, 1e-12);
  EXPECT_NEAR(r.entropy_bound, 0.0, 1e-10);
  EXPECT_TRUE(r.invariants_hold());
  ASSERT_EQ(r.key_probabilities.size(), 4u);
  for (double p : r.key_probabilities) EXPECT_NEAR(p, 0.25, 1e-12);
}

TEST(HolevoReport, TwoTermSinglePair) {
  const double h = 1.0 / std::sqrt(2.0);
  std::vector<AttackTerm> terms{{PauliPattern::from_string("0"), h, basis_vector(2, 0)},
                                {PauliPattern::from_string("1"), h, basis_vector(2, 1)}};
  const PureState psi = assemble_attack(terms, 1, 2).joint();
  const SecurityReport r = holevo_report(psi);
  EXPECT_NEAR(r.s_ab, 1.0, 1e-10);
  EXPECT_NEAR(r.s_e, 1.0, 1e-10);
  EXPECT_LE(r.chi, 1.0 + 1e-10);
  EXPECT_NEAR(r.chi, oracle_chi(psi.amplitudes(), 1, 2), 1e-10);
  EXPECT_NEAR(r.fidelity, 0.5, 1e-12);
}

TEST(HolevoReport, MatchesOracleChi) {
  oracle::Random rnd(51);
  for (int t = 0; t < 10; ++t) {
    const int n = 1 + t % 2;
    const int d = 2 + t % 3;
    const PureState psi = attack_joint(n, rnd.sparse_attack(n, d, 5));
    EXPECT_NEAR(holevo_report(psi).chi, oracle_chi(psi.amplitudes(), n, d), 1e-9);
  }
}

TEST(HolevoReport, InvariantsOnRandomAttacks) {
  for (std::uint64_t t = 0; t < 100; ++t) {
    CounterRng rng(61, t, Substream::attack);
    const PureAttackState s = random_attack(rng, 1 + t % 3, 1 + t % 4, 1 + t % 8);
    const SecurityReport r = holevo_report(s.joint());
    EXPECT_LT(std::abs(r.s_ab - r.s_e), 1e-9);
    EXPECT_GE(r.chi, -1e-9);
    EXPECT_LE(r.chi, r.s_e + 1e-9);
    EXPECT_LE(r.s_ab, r.entropy_bound + 1e-9);
    EXPECT_TRUE(r.invariants_hold());
    EXPECT_LE(r.max_violation(), 1e-9);
    EXPECT_NEAR(r.fidelity, classicalize(s).probability(0), 1e-12);
  }
}

TEST(HolevoReport, DensityOperatorInputAndErrors) {
  oracle::Random rnd(52);
  const PureState psi = attack_joint(1, rnd.sparse_attack(1, 2, 3));
  const SecurityReport a = holevo_report(psi);
  const SecurityReport b = holevo_report(DensityOperator::projector(psi));
  EXPECT_NEAR(a.s_ab, b.s_ab, 1e-10);
  EXPECT_NEAR(a.chi, b.chi, 1e-10);
  const Eigen::MatrixXcd mixed = Eigen::MatrixXcd::Identity(8, 8) / 8.0;
  EXPECT_THROW(holevo_report(DensityOperator(mixed, pair_layout(1, 2))), std::domain_error);
  const PureState no_eve(Eigen::VectorXcd(oracle::bell(0)), pair_layout(1));
  EXPECT_THROW(holevo_report(no_eve), std::domain_error);
  const PureState odd(rnd.unit_vector(6), SubsystemLayout({3, 2}, {"pair-1", "E"}));
  EXPECT_THROW(holevo_report(odd), std::domain_error);
}

TEST(HolevoReport, CustomKeyMeasurement) {
  oracle::Random rnd(53);
  const PureState psi = attack_joint(1, rnd.sparse_attack(1, 2, 4));
  // A constant key carries no information.
  KeyMeasurement constant{1, [](std::size_t) { return std::size_t{0}; }};
  EXPECT_NEAR(holevo_report(psi, kDefaultEveLabels, constant).chi, 0.0, 1e-10);
}

TEST(MixEnsemble, SingleElementAndTraceAndPositivity) {
  oracle::Random rnd(54);
  const PureState psi = attack_joint(1, rnd.sparse_attack(1, 3, 3));
  const LabeledEnsemble one({{1.0, psi}});
  const Strings ab{"pair-1"};
  EXPECT_LT((mix_ensemble(one).matrix() - partial_trace(psi, ab).matrix()).norm(), 1e-14);
  for (int t = 0; t < 10; ++t) {
    const DensityOperator m = mix_ensemble(random_ensemble(rnd, 4, 2, 2));
    EXPECT_NEAR(m.matrix().trace().real(), 1.0, 1e-12);
    EXPECT_GE(m.min_eigenvalue(), -1e-12);
  }
}

TEST(LabeledEnsemble, Validation) {
  oracle::Random rnd(55);
  const PureState a = attack_joint(1, rnd.sparse_attack(1, 2, 2));
  const PureState other = attack_joint(1, rnd.sparse_attack(1, 3, 2));
  EXPECT_THROW(LabeledEnsemble({}), std::domain_error);
  EXPECT_THROW(LabeledEnsemble({{0.5, a}}), std::domain_error);
  EXPECT_THROW(LabeledEnsemble({{1.2, a}, {-0.2, a}}), std::domain_error);
  EXPECT_THROW(LabeledEnsemble({{0.5, a}, {0.5, other}}), std::domain_error);
}

TEST(FidelityDecomposition, AllElementsEqualTarget) {
  const SubsystemLayout ab({4}, {"pair-1"});
  const PureState target = phi_plus_product(ab);
  const PureState elem(oracle::kron(oracle::bell(0), basis_vector(2, 0)), pair_layout(1, 2));
  const auto r = fidelity_decomposition_check(LabeledEnsemble({{0.4, elem}, {0.6, elem}}), target, 0.0);
  for (double f : r.term_fidelities) EXPECT_NEAR(f, 1.0, 1e-15);
  EXPECT_NEAR(r.average_fidelity, 1.0, 1e-15);
  EXPECT_NEAR(r.mixture_fidelity, 1.0, 1e-15);
  EXPECT_TRUE(r.precondition_met);
  EXPECT_TRUE(r.per_term_bound_holds);
}

TEST(FidelityDecomposition, SaturatingTwoElementCase) {
  const double eps = 0.1;
  const SubsystemLayout ab({4}, {"pair-1"});
  const PureState good(oracle::kron(oracle::bell(0), basis_vector(2, 0)), pair_layout(1, 2));
  const PureState bad(oracle::kron(oracle::bell(2), basis_vector(2, 1)), pair_layout(1, 2));
  const auto r = fidelity_decomposition_check(LabeledEnsemble({{1 - eps, good}, {eps, bad}}), phi_plus_product(ab), eps);
  EXPECT_NEAR(r.average_fidelity, 1 - eps, 1e-15);
  EXPECT_NEAR(r.term_defects[1], eps, 1e-15);
  EXPECT_TRUE(r.precondition_met);
  EXPECT_TRUE(r.per_term_bound_holds);
  // At the boundary the reversed relation is met with equality by the second term.
  EXPECT_GE(r.terms_meeting_reversed_relation, 1u);
  const auto failed = fidelity_decomposition_check(LabeledEnsemble({{1 - eps, good}, {eps, bad}}),
                                                   phi_plus_product(ab), eps / 2);
  EXPECT_FALSE(failed.precondition_met);
}

TEST(FidelityDecomposition, RandomEnsembles) {
  oracle::Random rnd(56);
  const SubsystemLayout ab = pair_layout(2);
  const PureState target = phi_plus_product(ab);
  for (int t = 0; t < 100; ++t) {
    const LabeledEnsemble ens = random_ensemble(rnd, 2 + t % 4, 2, 2);
    const DensityOperator mix = mix_ensemble(ens);
    const double f = fidelity_to_pure(mix, target);
    const auto r = fidelity_decomposition_check(ens, target, 1.0 - f);
    EXPECT_LT(r.identity_deviation, 1e-12);
    EXPECT_NEAR(r.average_fidelity, f, 1e-12);
    EXPECT_TRUE(r.precondition_met);
    EXPECT_TRUE(r.per_term_bound_holds);
    for (std::size_t i = 0; i < ens.size(); ++i) EXPECT_LE(r.term_defects[i], 1.0 - f + 1e-12);
  }
}

TEST(Purify, SingleElement) {
  oracle::Random rnd(57);
  const PureState psi = attack_joint(1, rnd.sparse_attack(1, 2, 2));
  const PureState p = purify(LabeledEnsemble({{1.0, psi}}));
  EXPECT_EQ(p.layout().labels().front(), kRegisterLabel);
  EXPECT_EQ(p.layout().dims().front(), 1u);
  EXPECT_LT((p.amplitudes() - psi.amplitudes()).norm(), 1e-15);
}

TEST(Purify, RegisterStateIsTheGramMatrix) {
  oracle::Random rnd(58);
  for (int t = 0; t < 10; ++t) {
    const LabeledEnsemble ens = random_ensemble(rnd, 2, 1, 2);
    const PureState p = purify(ens);
    const Strings reg{kRegisterLabel};
    const Eigen::MatrixXcd rho_r = partial_trace(p, reg).matrix();
    const auto& e = ens.elements();
    Eigen::Matrix2cd gram;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        gram(i, j) = std::sqrt(e[i].probability * e[j].probability) *
                     e[j].state.amplitudes().dot(e[i].state.amplitudes());
    EXPECT_LT((rho_r - Eigen::MatrixXcd(gram)).norm(), 1e-12);
    // Eigenvalues from the 2x2 closed form.
    const double p0 = e[0].probability, p1 = e[1].probability;
    const double ov = std::norm(e[0].state.amplitudes().dot(e[1].state.amplitudes()));
    const double disc = std::sqrt(1.0 - 4.0 * p0 * p1 * (1.0 - ov));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho_r);
    EXPECT_NEAR(es.eigenvalues()(0), 0.5 * (1 - disc), 1e-12);
    EXPECT_NEAR(es.eigenvalues()(1), 0.5 * (1 + disc), 1e-12);
  }
}

TEST(Purify, RoundTripAndOrthogonalEveCase) {
  oracle::Random rnd(59);
  for (int t = 0; t < 50; ++t) {
    const LabeledEnsemble ens = random_ensemble(rnd, 1 + t % 4, 1 + t % 2, 2);
    const PureState p = purify(ens);
    const Strings ab = ens.layout().labels().size() == 2 ? Strings{"pair-1"} : Strings{"pair-1", "pair-2"};
    EXPECT_LT((partial_trace(p, ab).matrix() - mix_ensemble(ens).matrix()).cwiseAbs().maxCoeff(), 1e-12);
    // The purified state is pure: both sides of the AB | (E, R) cut agree.
    const Strings rest{kRegisterLabel, "E"};
    EXPECT_NEAR(von_neumann_entropy(partial_trace(p, ab)), von_neumann_entropy(partial_trace(p, rest)), 1e-9);
  }
  const PureState a(oracle::kron(oracle::bell(0), basis_vector(2, 0)), pair_layout(1, 2));
  const PureState b(oracle::kron(oracle::bell(1), basis_vector(2, 1)), pair_layout(1, 2));
  const LabeledEnsemble ens({{0.5, a}, {0.5, b}});
  const Strings ab{"pair-1"};
  EXPECT_LT((partial_trace(purify(ens), ab).matrix() - mix_ensemble(ens).matrix()).norm(), 1e-14);
}

TEST(RegisterMeasurement, Examples) {
  const PureState a(oracle::kron(oracle::bell(0), basis_vector(2, 0)), pair_layout(1, 2));
  const PureState b(oracle::kron(oracle::bell(3), basis_vector(2, 1)), pair_layout(1, 2));
  const LabeledEnsemble one({{1.0, a}});
  const auto r1 = register_measurement_equivalence(purify(one), one);
  ASSERT_EQ(r1.outcome_probabilities.size(), 1u);
  EXPECT_NEAR(r1.outcome_probabilities[0], 1.0, 1e-15);
  const LabeledEnsemble two({{0.3, a}, {0.7, b}});
  const auto r2 = register_measurement_equivalence(purify(two), two);
  EXPECT_NEAR(r2.outcome_probabilities[0], 0.3, 1e-12);
  EXPECT_NEAR(r2.outcome_probabilities[1], 0.7, 1e-12);
  EXPECT_LT(r2.max_probability_deviation, 1e-12);
  for (double f : r2.conditional_fidelities) EXPECT_NEAR(f, 1.0, 1e-12);
}

TEST(RegisterMeasurement, RandomEnsemblesRespectBound) {
  oracle::Random rnd(60);
  for (int t = 0; t < 50; ++t) {
    const LabeledEnsemble ens = random_ensemble(rnd, 2 + t % 3, 1, 2);
    const auto r = register_measurement_equivalence(purify(ens), ens);
    EXPECT_LT(r.max_probability_deviation, 1e-12);
    for (double f : r.conditional_fidelities) EXPECT_NEAR(f, 1.0, 1e-12);
    EXPECT_LE(r.weighted_chi, r.purified_s_ab + 1e-9);
    EXPECT_TRUE(r.bound_holds);
    double weighted = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
      EXPECT_NEAR(r.element_chi[i], holevo_report(ens.elements()[i].state).chi, 1e-10);
      weighted += ens.elements()[i].probability * r.element_chi[i];
    }
    EXPECT_NEAR(weighted, r.weighted_chi, 1e-12);
  }
}

TEST(PhiPlusProduct, IsTensorPower) {
  const PureState p = phi_plus_product(pair_layout(2));
  EXPECT_LT((p.amplitudes() - oracle::pattern_vector({0, 0})).norm(), 1e-15);
}

}  // namespace
}  // namespace qkdlab
