#pragma once

// Security quantities for a pure Alice-Bob-Eve state: entropies of the two sides,
// the Holevo quantity of a key measurement against Eve, fidelity to |Phi+>^n and
// the largest entropy compatible with that fidelity. Also the ensemble machinery
// for Eve's refined (classical) information about the final state.
//
// Subsystems named in `eve_labels` belong to Eve; every other subsystem is a
// 4-dimensional Alice-Bob pair.

#include "qkdlab/qstate.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qkdlab {

/// A measurement on AB that is diagonal in the computational basis: key_of maps an
/// AB computational index to a key value in [0, n_values).
struct KeyMeasurement {
  std::size_t n_values = 0;
  std::function<std::size_t(std::size_t)> key_of;
};

/// Z on Alice's qubit of every pair; the key is Alice's bit string, pair 1 first.
KeyMeasurement alice_z_key(std::size_t n_pairs);

inline const std::vector<std::string> kDefaultEveLabels{"E"};

struct SecurityReport {
  double s_ab = 0.0;
  double s_e = 0.0;
  double chi = 0.0;
  double fidelity = 0.0;
  double entropy_bound = 0.0;
  std::vector<double> key_probabilities;

  /// |S_AB - S_E| <= tol, -tol <= chi <= S_E + tol, S_AB <= entropy_bound + tol.
  bool invariants_hold(double tolerance = 1e-9) const noexcept;
  double max_violation() const noexcept;
};

/// Throws std::domain_error if psi lacks an Eve or an AB subsystem, or an AB
/// subsystem is not 4-dimensional.
SecurityReport holevo_report(const PureState& psi_abe, const std::vector<std::string>& eve_labels = kDefaultEveLabels,
                             const std::optional<KeyMeasurement>& key = std::nullopt);

/// Mixed-input form: throws std::domain_error when tr(rho^2) < 1 - 1e-8.
SecurityReport holevo_report(const DensityOperator& rho_abe,
                             const std::vector<std::string>& eve_labels = kDefaultEveLabels,
                             const std::optional<KeyMeasurement>& key = std::nullopt);

/// |Phi+>^{n} over the given pairs layout (every subsystem 4-dimensional).
PureState phi_plus_product(const SubsystemLayout& ab_layout);

struct EnsembleElement {
  double probability;
  PureState state;
};

class LabeledEnsemble {
 public:
  /// Throws std::domain_error if empty, layouts differ, or probabilities are
  /// negative or do not sum to 1 within 1e-10.
  explicit LabeledEnsemble(std::vector<EnsembleElement> elements);

  const std::vector<EnsembleElement>& elements() const noexcept { return elements_; }
  const SubsystemLayout& layout() const noexcept { return elements_.front().state.layout(); }
  std::size_t size() const noexcept { return elements_.size(); }

 private:
  std::vector<EnsembleElement> elements_;
};

/// sum_i p_i tr_E(psi_i).
DensityOperator mix_ensemble(const LabeledEnsemble& ensemble,
                             const std::vector<std::string>& eve_labels = kDefaultEveLabels);

struct FidelityDecomposition {
  std::vector<double> term_fidelities;
  std::vector<double> term_defects;  // p_i (1 - F_i)
  double average_fidelity = 0.0;     // sum_i p_i F_i
  double mixture_fidelity = 0.0;     // F(mix, target)
  double identity_deviation = 0.0;
  double epsilon = 0.0;
  bool precondition_met = false;     // mixture_fidelity >= 1 - epsilon
  /// p_i (1 - F_i) <= epsilon for every i; implied by the precondition.
  bool per_term_bound_holds = false;
  /// Terms with p_i (1 - F_i) >= epsilon, the reversed inequality.
  std::size_t terms_meeting_reversed_relation = 0;
};

FidelityDecomposition fidelity_decomposition_check(const LabeledEnsemble& ensemble, const PureState& target,
                                                   double epsilon,
                                                   const std::vector<std::string>& eve_labels = kDefaultEveLabels);

inline const std::string kRegisterLabel = "R";

/// sum_i sqrt(p_i) |i>_R |psi_i>, register first, register dimension = ensemble size.
PureState purify(const LabeledEnsemble& ensemble);

struct RegisterMeasurementReport {
  std::vector<double> outcome_probabilities;
  /// |<psi_i | conditional state_i>|^2.
  std::vector<double> conditional_fidelities;
  double max_probability_deviation = 0.0;
  /// S(tr_{E, R}) of the purified state.
  double purified_s_ab = 0.0;
  /// chi_i of each element against Eve alone, and sum_i p_i chi_i.
  std::vector<double> element_chi;
  double weighted_chi = 0.0;
  bool bound_holds = false;  // weighted_chi <= purified_s_ab + 1e-9
};

/// Measures the register of a state built by purify() and compares against the ensemble.
RegisterMeasurementReport register_measurement_equivalence(const PureState& purified, const LabeledEnsemble& ensemble,
                                                           const std::vector<std::string>& eve_labels = kDefaultEveLabels);

}  // namespace qkdlab
