#include "qkdlab/checking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qkdlab {

namespace {

using ProjectorSet = std::vector<Eigen::MatrixXcd>;

ProjectorSet projectors_for(CheckBasis basis, MeasurementMode mode) {
  ProjectorSet set;
  if (mode == MeasurementMode::nonlocal) {
    set.push_back(check_projector(basis, 0));
    set.push_back(check_projector(basis, 1));
  } else {
    for (int raw = 0; raw < 4; ++raw) set.push_back(local_projector(basis, raw >> 1, raw & 1));
  }
  return set;
}

std::vector<ProjectorSet> plan_projectors(const CheckPlan& plan, MeasurementMode mode) {
  std::vector<ProjectorSet> sets;
  sets.reserve(plan.size());
  for (const auto& cp : plan.pairs()) sets.push_back(projectors_for(cp.basis, mode));
  return sets;
}

std::vector<std::size_t> plan_positions(const CheckPlan& plan) {
  std::vector<std::size_t> pos;
  pos.reserve(plan.size());
  for (const auto& cp : plan.pairs()) pos.push_back(cp.pair);
  return pos;
}

// Visits (outcome index, projected vector) for every branch of the product measurement.
template <class Visit>
void for_each_branch(const Eigen::VectorXcd& v, const SubsystemLayout& layout,
                     const std::vector<std::size_t>& positions, const std::vector<ProjectorSet>& sets,
                     std::size_t depth, std::size_t index, Visit& visit) {
  if (depth == positions.size()) {
    visit(index, v);
    return;
  }
  const std::size_t radix = sets[depth].size();
  for (std::size_t o = 0; o < radix; ++o) {
    const Eigen::VectorXcd w = apply_local(v, layout, positions[depth], sets[depth][o]);
    if (w.squaredNorm() == 0.0) continue;
    for_each_branch(w, layout, positions, sets, depth + 1, index * radix + o, visit);
  }
}

template <class Visit>
void for_each_branch(const Eigen::MatrixXcd& rho, const SubsystemLayout& layout,
                     const std::vector<std::size_t>& positions, const std::vector<ProjectorSet>& sets,
                     std::size_t depth, std::size_t index, Visit& visit) {
  if (depth == positions.size()) {
    visit(index, rho);
    return;
  }
  const std::size_t radix = sets[depth].size();
  for (std::size_t o = 0; o < radix; ++o) {
    const Eigen::MatrixXcd r = sandwich_local(rho, layout, positions[depth], sets[depth][o]);
    if (r.trace().real() == 0.0 && r.cwiseAbs().maxCoeff() == 0.0) continue;
    for_each_branch(r, layout, positions, sets, depth + 1, index * radix + o, visit);
  }
}

std::size_t power(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

// |<ab|B_k>|^2 for the given basis, indexed [k][2a + b].
using RawTable = std::array<std::array<double, 4>, 4>;

RawTable raw_table(CheckBasis basis) {
  RawTable t{};
  for (int k = 0; k < 4; ++k) {
    const BellVector b = bell_state(static_cast<Pauli>(k));
    const Eigen::Vector4cd bv(b[0], b[1], b[2], b[3]);
    for (int raw = 0; raw < 4; ++raw) {
      const Eigen::Matrix4cd p = local_projector(basis, raw >> 1, raw & 1);
      t[static_cast<std::size_t>(k)][static_cast<std::size_t>(raw)] = (bv.adjoint() * p * bv)(0, 0).real();
    }
  }
  return t;
}

const RawTable& cached_raw_table(CheckBasis basis) {
  static const RawTable z = raw_table(CheckBasis::Z);
  static const RawTable x = raw_table(CheckBasis::X);
  return basis == CheckBasis::Z ? z : x;
}

std::size_t error_string_of_pattern(std::uint64_t index, std::size_t n_pairs, const CheckPlan& plan) {
  std::size_t out = 0;
  for (const auto& cp : plan.pairs()) {
    const auto k = static_cast<Pauli>(pattern_digit(index, cp.pair, n_pairs));
    out = (out << 1) | static_cast<std::size_t>(error_bit(k, cp.basis));
  }
  return out;
}

// Likelihood of a raw local outcome string given pattern `index`.
double raw_likelihood(std::uint64_t index, std::size_t n_pairs, const CheckPlan& plan, std::size_t raw) {
  const std::size_t c = plan.size();
  double w = 1.0;
  for (std::size_t i = 0; i < c; ++i) {
    const auto& cp = plan.pairs()[i];
    const int k = pattern_digit(index, cp.pair, n_pairs);
    const std::size_t digit = (raw >> (2 * (c - 1 - i))) & 3U;
    w *= cached_raw_table(cp.basis)[static_cast<std::size_t>(k)][digit];
  }
  return w;
}

// M' with M' M'^dagger = M M^dagger and at most rows(M) columns.
Eigen::MatrixXcd compress_environment(const Eigen::MatrixXcd& m) {
  if (m.cols() <= m.rows()) return m;
  const Eigen::MatrixXcd gram = m * m.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cutoff = 1e-15 * std::max(ev.maxCoeff(), 0.0);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = ev.size(); i-- > 0;) {
    if (ev(i) > cutoff) keep.push_back(i);
  }
  Eigen::MatrixXcd out(m.rows(), static_cast<Eigen::Index>(std::max<std::size_t>(keep.size(), 1)));
  out.setZero();
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(ev(keep[c]));
  }
  return out / out.norm();
}

}  // namespace

char basis_char(CheckBasis b) noexcept { return b == CheckBasis::Z ? 'Z' : 'X'; }

const char* mode_name(MeasurementMode m) noexcept {
  return m == MeasurementMode::nonlocal ? "nonlocal" : "local";
}

CheckPlan::CheckPlan(std::vector<CheckedPair> pairs, MeasurementMode mode) : pairs_(std::move(pairs)), mode_(mode) {}

void CheckPlan::validate(std::size_t n_pairs) const {
  if (pairs_.empty()) {
    throw std::domain_error("check plan is empty");
  }
  std::vector<bool> seen(n_pairs, false);
  for (const auto& cp : pairs_) {
    if (cp.pair >= n_pairs) {
      throw std::domain_error("checked pair " + std::to_string(cp.pair + 1) + " out of range for " +
                              std::to_string(n_pairs) + " pairs");
    }
    if (seen[cp.pair]) {
      throw std::domain_error("pair " + std::to_string(cp.pair + 1) + " checked twice");
    }
    if (cp.basis != CheckBasis::Z && cp.basis != CheckBasis::X) {
      throw std::domain_error("checked pair has no Z/X basis");
    }
    seen[cp.pair] = true;
  }
}

std::vector<std::size_t> CheckPlan::unchecked(std::size_t n_pairs) const {
  std::vector<bool> checked(n_pairs, false);
  for (const auto& cp : pairs_) {
    if (cp.pair < n_pairs) checked[cp.pair] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    if (!checked[i]) out.push_back(i);
  }
  return out;
}

std::string CheckPlan::to_string() const {
  std::string s;
  for (const auto& cp : pairs_) {
    if (!s.empty()) s.push_back(' ');
    s += std::to_string(cp.pair + 1);
    s.push_back(basis_char(cp.basis));
  }
  return s;
}

int error_bit(Pauli k, CheckBasis basis) noexcept {
  if (basis == CheckBasis::Z) {
    return (k == Pauli::X || k == Pauli::Y) ? 1 : 0;
  }
  return (k == Pauli::Y || k == Pauli::Z) ? 1 : 0;
}

Eigen::Matrix4cd local_projector(CheckBasis basis, int alice, int bob) {
  if (alice < 0 || alice > 1 || bob < 0 || bob > 1) {
    throw std::domain_error("local outcomes must be bits");
  }
  const auto v = single_qubit_basis(basis == CheckBasis::Z ? Basis::Z : Basis::X);
  Eigen::Vector4cd ab;
  const auto& a = v[static_cast<std::size_t>(alice)];
  const auto& b = v[static_cast<std::size_t>(bob)];
  ab << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
  return ab * ab.adjoint();
}

Eigen::Matrix4cd check_projector(CheckBasis basis, int error) {
  if (error != 0 && error != 1) {
    throw std::domain_error("check outcome must be 0 or 1");
  }
  Eigen::Matrix4cd p = Eigen::Matrix4cd::Zero();
  for (int a = 0; a < 2; ++a) {
    p += local_projector(basis, a, a ^ error);
  }
  return p;
}

void ProtocolConfig::validate() const {
  if (n_pairs_total < 2 || n_pairs_total % 2 != 0) {
    throw std::domain_error("n_pairs_total must be a positive even number");
  }
  if (!(e_check >= 0.0 && e_check < 1.0)) {
    throw std::domain_error("e_check must lie in [0,1)");
  }
  if (!(e_cor > e_check && e_cor <= 1.0)) {
    throw std::domain_error("e_cor must satisfy e_check < e_cor <= 1");
  }
  if (trials == 0) {
    throw std::domain_error("trials must be positive");
  }
}

bool check_passes(std::size_t error_count, std::size_t n_checked, double e_check) noexcept {
  // Compared as counts so that e.g. 3 errors in 10 passes e_check = 0.3.
  return static_cast<double>(error_count) <= e_check * static_cast<double>(n_checked) + 1e-9;
}

std::size_t n_pairs_of(const AttackState& state) {
  return std::visit([](const auto& s) { return s.n_pairs(); }, state);
}

OutcomeDistribution outcome_distribution(const PureAttackState& state, const CheckPlan& plan) {
  plan.validate(state.n_pairs());
  if (plan.mode() == MeasurementMode::local) {
    const auto raw = raw_local_distribution(state, plan);
    OutcomeDistribution dist(std::size_t{1} << plan.size(), 0.0);
    for (std::size_t r = 0; r < raw.size(); ++r) dist[error_string_of_raw(r, plan.size())] += raw[r];
    return dist;
  }
  const PureState joint = state.joint();
  OutcomeDistribution dist(std::size_t{1} << plan.size(), 0.0);
  const auto positions = plan_positions(plan);
  const auto sets = plan_projectors(plan, MeasurementMode::nonlocal);
  auto visit = [&dist](std::size_t idx, const Eigen::VectorXcd& w) { dist[idx] += w.squaredNorm(); };
  for_each_branch(joint.amplitudes(), joint.layout(), positions, sets, 0, 0, visit);
  return dist;
}

std::vector<double> raw_local_distribution(const PureAttackState& state, const CheckPlan& plan) {
  plan.validate(state.n_pairs());
  const PureState joint = state.joint();
  std::vector<double> dist(power(4, plan.size()), 0.0);
  const auto positions = plan_positions(plan);
  const auto sets = plan_projectors(plan, MeasurementMode::local);
  auto visit = [&dist](std::size_t idx, const Eigen::VectorXcd& w) { dist[idx] += w.squaredNorm(); };
  for_each_branch(joint.amplitudes(), joint.layout(), positions, sets, 0, 0, visit);
  return dist;
}

OutcomeDistribution outcome_distribution(const BellDiagonalState& state, const CheckPlan& plan) {
  plan.validate(state.n_pairs());
  if (plan.mode() == MeasurementMode::local) {
    const auto raw = raw_local_distribution(state, plan);
    OutcomeDistribution dist(std::size_t{1} << plan.size(), 0.0);
    for (std::size_t r = 0; r < raw.size(); ++r) dist[error_string_of_raw(r, plan.size())] += raw[r];
    return dist;
  }
  OutcomeDistribution dist(std::size_t{1} << plan.size(), 0.0);
  for (const auto& e : state.entries()) {
    dist[error_string_of_pattern(e.index, state.n_pairs(), plan)] += e.probability;
  }
  return dist;
}

std::vector<double> raw_local_distribution(const BellDiagonalState& state, const CheckPlan& plan) {
  plan.validate(state.n_pairs());
  const std::size_t c = plan.size();
  std::vector<double> dist(power(4, c), 0.0);
  std::vector<std::pair<std::size_t, double>> partial;
  for (const auto& e : state.entries()) {
    partial.assign(1, {0, e.probability});
    for (const auto& cp : plan.pairs()) {
      const auto k = static_cast<std::size_t>(pattern_digit(e.index, cp.pair, state.n_pairs()));
      const auto& row = cached_raw_table(cp.basis)[k];
      std::vector<std::pair<std::size_t, double>> next;
      next.reserve(partial.size() * 2);
      for (const auto& [idx, w] : partial) {
        for (std::size_t raw = 0; raw < 4; ++raw) {
          if (row[raw] > 0.0) next.emplace_back(idx * 4 + raw, w * row[raw]);
        }
      }
      partial = std::move(next);
    }
    for (const auto& [idx, w] : partial) dist[idx] += w;
  }
  return dist;
}

OutcomeDistribution outcome_distribution(const AttackState& state, const CheckPlan& plan) {
  return std::visit([&plan](const auto& s) { return outcome_distribution(s, plan); }, state);
}

std::size_t error_string_of_raw(std::size_t raw, std::size_t n_checked) noexcept {
  std::size_t out = 0;
  for (std::size_t i = 0; i < n_checked; ++i) {
    const std::size_t digit = (raw >> (2 * (n_checked - 1 - i))) & 3U;
    out = (out << 1) | ((digit >> 1) ^ (digit & 1U));
  }
  return out;
}

std::string outcome_label(std::size_t outcome, std::size_t n_bits) {
  std::string s(n_bits, '0');
  for (std::size_t i = 0; i < n_bits; ++i) {
    if ((outcome >> (n_bits - 1 - i)) & 1U) s[i] = '1';
  }
  return s;
}

AttackState collapse(const AttackState& state, const CheckPlan& plan, std::size_t outcome) {
  plan.validate(n_pairs_of(state));
  const std::size_t space = plan.mode() == MeasurementMode::nonlocal ? (std::size_t{1} << plan.size())
                                                                      : power(4, plan.size());
  if (outcome >= space) {
    throw std::domain_error("outcome index out of range for the plan");
  }
  const auto zero_probability = [] { return std::domain_error("cannot collapse onto a zero-probability outcome"); };

  if (const auto* pure = std::get_if<PureAttackState>(&state)) {
    const std::size_t n = pure->n_pairs();
    if (plan.mode() == MeasurementMode::nonlocal) {
      Eigen::MatrixXcd amps = pure->bell_amplitudes();
      for (Eigen::Index r = 0; r < amps.rows(); ++r) {
        if (error_string_of_pattern(static_cast<std::uint64_t>(r), n, plan) != outcome) amps.row(r).setZero();
      }
      const double norm = amps.norm();
      if (norm == 0.0) throw zero_probability();
      return PureAttackState(n, amps / norm);
    }
    const PureState joint = pure->joint();
    Eigen::VectorXcd v = joint.amplitudes();
    const std::size_t c = plan.size();
    for (std::size_t i = 0; i < c; ++i) {
      const auto& cp = plan.pairs()[i];
      const std::size_t digit = (outcome >> (2 * (c - 1 - i))) & 3U;
      v = apply_local(v, joint.layout(), cp.pair,
                      local_projector(cp.basis, static_cast<int>(digit >> 1), static_cast<int>(digit & 1U)));
    }
    const double norm = v.norm();
    if (norm == 0.0) throw zero_probability();
    return PureAttackState::from_joint(PureState(v / norm, joint.layout()));
  }

  const auto& bd = std::get<BellDiagonalState>(state);
  std::vector<BellDiagonalState::Entry> kept;
  double total = 0.0;
  for (const auto& e : bd.entries()) {
    const double w = plan.mode() == MeasurementMode::nonlocal
                         ? (error_string_of_pattern(e.index, bd.n_pairs(), plan) == outcome ? e.probability : 0.0)
                         : e.probability * raw_likelihood(e.index, bd.n_pairs(), plan, outcome);
    if (w > 0.0) {
      kept.push_back({e.index, w});
      total += w;
    }
  }
  if (total == 0.0) throw zero_probability();
  for (auto& e : kept) e.probability /= total;
  return BellDiagonalState(bd.n_pairs(), std::move(kept));
}

AttackState discard_checked(const AttackState& state, const CheckPlan& plan) {
  const std::size_t n = n_pairs_of(state);
  plan.validate(n);
  const auto unchecked = plan.unchecked(n);
  if (unchecked.empty()) {
    throw std::domain_error("every pair was checked; nothing remains");
  }
  const std::size_t u = unchecked.size();
  const std::size_t c = plan.size();

  auto split = [&](std::uint64_t index) {
    std::uint64_t kept = 0;
    for (std::size_t p : unchecked) kept = (kept << 2) | static_cast<std::uint64_t>(pattern_digit(index, p, n));
    std::uint64_t gone = 0;
    for (const auto& cp : plan.pairs()) gone = (gone << 2) | static_cast<std::uint64_t>(pattern_digit(index, cp.pair, n));
    return std::pair{kept, gone};
  };

  if (const auto* pure = std::get_if<PureAttackState>(&state)) {
    const Eigen::MatrixXcd& amps = pure->bell_amplitudes();
    const Eigen::Index d = amps.cols();
    const auto rows = static_cast<Eigen::Index>(pattern_space_size(u));
    const auto cols = static_cast<Eigen::Index>(pattern_space_size(c)) * d;
    Eigen::MatrixXcd folded = Eigen::MatrixXcd::Zero(rows, cols);
    for (Eigen::Index r = 0; r < amps.rows(); ++r) {
      const auto [kept, gone] = split(static_cast<std::uint64_t>(r));
      folded.block(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(gone) * d, 1, d) = amps.row(r);
    }
    return PureAttackState(u, compress_environment(folded));
  }

  const auto& bd = std::get<BellDiagonalState>(state);
  std::vector<BellDiagonalState::Entry> entries;
  entries.reserve(bd.entries().size());
  for (const auto& e : bd.entries()) entries.push_back({split(e.index).first, e.probability});
  return BellDiagonalState(u, std::move(entries));
}

CheckSample sample_check(const AttackState& state, const CheckPlan& plan, CounterRng& rng) {
  plan.validate(n_pairs_of(state));
  const bool local = plan.mode() == MeasurementMode::local;
  const std::vector<double> dist =
      local ? std::visit([&plan](const auto& s) { return raw_local_distribution(s, plan); }, state)
            : outcome_distribution(state, plan);

  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t outcome = dist.size();
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0.0) continue;
    last_nonzero = i;
    cumulative += dist[i];
    if (u < cumulative) {
      outcome = i;
      break;
    }
  }
  if (outcome == dist.size()) outcome = last_nonzero;  // rounding in the cumulative sum

  const std::size_t c = plan.size();
  CheckSample sample{outcome, local ? error_string_of_raw(outcome, c) : outcome, {}, collapse(state, plan, outcome)};
  sample.records.reserve(c);
  for (std::size_t i = 0; i < c; ++i) {
    const auto& cp = plan.pairs()[i];
    CheckRecord rec{cp.pair, cp.basis, static_cast<int>((sample.error_string >> (c - 1 - i)) & 1U), std::nullopt};
    if (local) {
      const std::size_t digit = (outcome >> (2 * (c - 1 - i))) & 3U;
      rec.raw_local_outcomes = std::pair{static_cast<int>(digit >> 1), static_cast<int>(digit & 1U)};
    }
    sample.records.push_back(rec);
  }
  return sample;
}

CheckPlan random_check_plan(std::size_t n_pairs, std::size_t n_checked, MeasurementMode mode,
                            CounterRng& plan_rng, CounterRng& basis_rng) {
  if (n_checked == 0 || n_checked > n_pairs) {
    throw std::domain_error("cannot check " + std::to_string(n_checked) + " of " + std::to_string(n_pairs) + " pairs");
  }
  std::vector<std::size_t> order(n_pairs);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < n_checked; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(plan_rng.below(n_pairs - i));
    std::swap(order[i], order[j]);
  }
  order.resize(n_checked);
  std::sort(order.begin(), order.end());
  std::vector<CheckedPair> pairs;
  pairs.reserve(n_checked);
  for (std::size_t p : order) pairs.push_back({p, basis_rng.coin() ? CheckBasis::X : CheckBasis::Z});
  return CheckPlan(std::move(pairs), mode);
}

ProtocolOutcome run_check_phase(const AttackState& state, const ProtocolConfig& config, const TrialStreams& streams) {
  config.validate();
  if (n_pairs_of(state) != config.n_pairs_total) {
    throw std::domain_error("state has " + std::to_string(n_pairs_of(state)) + " pairs but the protocol expects " +
                            std::to_string(config.n_pairs_total));
  }
  auto plan_rng = streams.stream(Substream::plan);
  auto basis_rng = streams.stream(Substream::basis);
  auto outcome_rng = streams.stream(Substream::outcome);
  CheckPlan plan = random_check_plan(config.n_pairs_total, config.n_checked(), config.mode, plan_rng, basis_rng);
  CheckSample sample = sample_check(state, plan, outcome_rng);

  std::size_t errors = 0;
  for (const auto& r : sample.records) errors += static_cast<std::size_t>(r.error_bit);
  const std::size_t n = config.n_checked();
  AttackState residual = discard_checked(sample.collapsed, plan);
  return ProtocolOutcome{std::move(plan),
                         std::move(sample.records),
                         errors,
                         static_cast<double>(errors) / static_cast<double>(n),
                         check_passes(errors, n, config.e_check),
                         std::move(residual)};
}

double max_abs_difference(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::domain_error("distribution sizes differ");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double LocalEquivalenceReport::max_deviation() const noexcept {
  return std::max({distribution_deviation, nonlocal_state_deviation, local_state_deviation});
}

LocalEquivalenceReport local_equivalence_report(const PureAttackState& state, const CheckPlan& plan) {
  plan.validate(state.n_pairs());
  LocalEquivalenceReport report;
  report.nonlocal_distribution = outcome_distribution(state, plan.with_mode(MeasurementMode::nonlocal));
  report.local_distribution = outcome_distribution(state, plan.with_mode(MeasurementMode::local));
  report.distribution_deviation = max_abs_difference(report.nonlocal_distribution, report.local_distribution);

  const PureState joint = state.joint();
  const auto info = plan.unchecked(state.n_pairs());
  const auto positions = plan_positions(plan);
  report.info_before = reduce(joint.amplitudes(), joint.layout(), info);

  for (const auto mode : {MeasurementMode::nonlocal, MeasurementMode::local}) {
    Eigen::MatrixXcd after = Eigen::MatrixXcd::Zero(report.info_before.rows(), report.info_before.cols());
    auto visit = [&](std::size_t, const Eigen::VectorXcd& w) { after += reduce(w, joint.layout(), info); };
    for_each_branch(joint.amplitudes(), joint.layout(), positions, plan_projectors(plan, mode), 0, 0, visit);
    const double dev = (after - report.info_before).cwiseAbs().maxCoeff();
    if (mode == MeasurementMode::nonlocal) {
      report.info_after_nonlocal = std::move(after);
      report.nonlocal_state_deviation = dev;
    } else {
      report.info_after_local = std::move(after);
      report.local_state_deviation = dev;
    }
  }
  return report;
}

LocalEquivalenceReport local_equivalence_report(const BellDiagonalState& state, const CheckPlan& plan) {
  plan.validate(state.n_pairs());
  LocalEquivalenceReport report;
  report.nonlocal_distribution = outcome_distribution(state, plan.with_mode(MeasurementMode::nonlocal));
  report.local_distribution = outcome_distribution(state, plan.with_mode(MeasurementMode::local));
  report.distribution_deviation = max_abs_difference(report.nonlocal_distribution, report.local_distribution);

  const DensityOperator rho = density_operator_of(state);
  const auto info = plan.unchecked(state.n_pairs());
  const auto positions = plan_positions(plan);
  report.info_before = reduce(rho.matrix(), rho.layout(), info);

  for (const auto mode : {MeasurementMode::nonlocal, MeasurementMode::local}) {
    Eigen::MatrixXcd after = Eigen::MatrixXcd::Zero(report.info_before.rows(), report.info_before.cols());
    auto visit = [&](std::size_t, const Eigen::MatrixXcd& r) { after += reduce(r, rho.layout(), info); };
    for_each_branch(rho.matrix(), rho.layout(), positions, plan_projectors(plan, mode), 0, 0, visit);
    const double dev = (after - report.info_before).cwiseAbs().maxCoeff();
    if (mode == MeasurementMode::nonlocal) {
      report.info_after_nonlocal = std::move(after);
      report.nonlocal_state_deviation = dev;
    } else {
      report.info_after_local = std::move(after);
      report.local_state_deviation = dev;
    }
  }
  return report;
}

}  // namespace qkdlab
