#include "qkdlab/distillation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qkdlab {

namespace {

// P(errors = e | j checked pairs of type kind), uniform Z/X basis per pair.
std::vector<double> detection_law(std::size_t j, Pauli kind) {
  std::vector<double> law(j + 1, 0.0);
  const int z_err = error_bit(kind, CheckBasis::Z);
  const int x_err = error_bit(kind, CheckBasis::X);
  if (z_err == x_err) {
    law[z_err == 1 ? j : 0] = 1.0;
    return law;
  }
  // exactly one basis flags the pair: Binomial(j, 1/2)
  for (std::size_t e = 0; e <= j; ++e) {
    law[e] = std::exp(log_binomial(j, e) - static_cast<double>(j) * std::log(2.0));
  }
  return law;
}

}  // namespace

ErrorTypeCounts error_type_counts(const PauliPattern& pattern) {
  ErrorTypeCounts c;
  for (Pauli p : pattern.entries()) {
    if (p == Pauli::X || p == Pauli::Y) ++c.x_type;
    if (p == Pauli::Y || p == Pauli::Z) ++c.z_type;
  }
  return c;
}

ErrorTypeCounts error_type_counts(std::uint64_t index, std::size_t n_pairs) {
  ErrorTypeCounts c;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const int k = pattern_digit(index, i, n_pairs);
    if (k == 1 || k == 2) ++c.x_type;
    if (k == 2 || k == 3) ++c.z_type;
  }
  return c;
}

void CodeModel::validate() const {
  if (n_info == 0) {
    throw std::domain_error("code needs at least one information pair");
  }
  if (t_x > n_info || t_z > n_info) {
    throw std::domain_error("correction radius exceeds the number of information pairs");
  }
}

CodeModel CodeModel::for_error_rate(double error_rate, std::size_t n_info) {
  if (!(error_rate >= 0.0 && error_rate <= 1.0)) {
    throw std::domain_error("error rate must lie in [0,1]");
  }
  const auto t = static_cast<std::size_t>(std::floor(error_rate * static_cast<double>(n_info) + 1e-9));
  const std::size_t r = std::min(t, n_info);
  return CodeModel{r, r, n_info};
}

CodeResult apply_code(const BellDiagonalState& residual, const CodeModel& code) {
  code.validate();
  if (residual.n_pairs() != code.n_info) {
    throw std::domain_error("residual has " + std::to_string(residual.n_pairs()) + " pairs, code expects " +
                            std::to_string(code.n_info));
  }
  double corrected_mass = 0.0;
  std::vector<BellDiagonalState::Entry> entries;
  for (const auto& e : residual.entries()) {
    const auto counts = error_type_counts(e.index, residual.n_pairs());
    if (counts.x_type <= code.t_x && counts.z_type <= code.t_z) {
      corrected_mass += e.probability;
    } else {
      entries.push_back(e);
    }
  }
  if (corrected_mass > 0.0) entries.push_back({0, corrected_mass});
  BellDiagonalState corrected(residual.n_pairs(), std::move(entries));
  return CodeResult{corrected.probability(0), std::move(corrected)};
}

double sift_threshold(const ProtocolConfig& config) noexcept {
  return 2.0 * static_cast<double>(config.n_pairs_total) * config.e_cor;
}

bool exceeds_sift_threshold(std::size_t m_illegitimate, const ProtocolConfig& config) noexcept {
  return static_cast<double>(m_illegitimate) > sift_threshold(config) + 1e-9;
}

double SiftEstimate::standard_error() const noexcept {
  if (trials == 0) return 0.0;
  const double p = pass_probability;
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

SiftEstimate sift_probability(std::size_t m_illegitimate, const ProtocolConfig& config, Pauli kind) {
  config.validate();
  const std::size_t total = config.n_pairs_total;
  const std::size_t n = config.n_checked();
  if (m_illegitimate > total) {
    throw std::domain_error("more illegitimate pairs than pairs");
  }

  SiftEstimate est;
  est.trials = config.trials;
  est.residual_distribution.assign(total - n + 1, 0.0);
  std::vector<std::size_t> order(total);
  for (std::size_t t = 0; t < config.trials; ++t) {
    CounterRng rng(config.seed, t, Substream::sift);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t errors = 0;
    std::size_t checked_illegitimate = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
      std::swap(order[i], order[j]);
      const CheckBasis basis = rng.coin() ? CheckBasis::X : CheckBasis::Z;
      if (order[i] < m_illegitimate) {
        ++checked_illegitimate;
        errors += static_cast<std::size_t>(error_bit(kind, basis));
      }
    }
    if (check_passes(errors, n, config.e_check)) {
      ++est.passes;
      est.residual_distribution[m_illegitimate - checked_illegitimate] += 1.0;
    }
  }
  est.pass_probability = static_cast<double>(est.passes) / static_cast<double>(est.trials);
  if (est.passes > 0) {
    for (auto& r : est.residual_distribution) r /= static_cast<double>(est.passes);
  }
  return est;
}

SiftExact exact_sift_probability(std::size_t m_illegitimate, const ProtocolConfig& config, Pauli kind) {
  config.validate();
  const std::size_t total = config.n_pairs_total;
  const std::size_t n = config.n_checked();
  const std::size_t m = m_illegitimate;
  if (m > total) {
    throw std::domain_error("more illegitimate pairs than pairs");
  }
  SiftExact out;
  out.residual_joint.assign(total - n + 1, 0.0);
  const double log_norm = log_binomial(total, n);
  const std::size_t j_min = m > total - n ? m - (total - n) : 0;
  const std::size_t j_max = std::min(m, n);
  // Hypergeometric weights, renormalized so that rounding in lgamma cannot push
  // the total above 1.
  std::vector<double> hyper(j_max + 1, 0.0);
  double hyper_sum = 0.0;
  for (std::size_t j = j_min; j <= j_max; ++j) {
    hyper[j] = std::exp(log_binomial(m, j) + log_binomial(total - m, n - j) - log_norm);
    hyper_sum += hyper[j];
  }
  for (std::size_t j = j_min; j <= j_max; ++j) {
    const auto law = detection_law(j, kind);
    double pass = 0.0;
    for (std::size_t e = 0; e <= j; ++e) {
      if (check_passes(e, n, config.e_check)) pass += law[e];
    }
    out.residual_joint[m - j] += hyper[j] / hyper_sum * std::min(pass, 1.0);
  }
  out.pass_probability =
      std::clamp(std::accumulate(out.residual_joint.begin(), out.residual_joint.end(), 0.0), 0.0, 1.0);
  out.residual_distribution.assign(out.residual_joint.size(), 0.0);
  if (out.pass_probability > 0.0) {
    for (std::size_t r = 0; r < out.residual_joint.size(); ++r) {
      out.residual_distribution[r] = out.residual_joint[r] / out.pass_probability;
    }
  }
  return out;
}

ResidualPosterior bayes_residual_bound(std::span<const double> prior, const ProtocolConfig& config, Pauli kind) {
  config.validate();
  const std::size_t total = config.n_pairs_total;
  const std::size_t n_info = total - config.n_checked();
  if (prior.size() != total + 1) {
    throw std::domain_error("prior must have 2n + 1 entries");
  }
  double sum = 0.0;
  for (double p : prior) {
    if (!(p >= 0.0)) throw std::domain_error("prior has a negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-10) {
    throw std::domain_error("prior does not sum to 1");
  }

  ResidualPosterior post;
  post.ratios.resize(n_info + 1);
  post.posterior.assign(n_info + 1, 0.0);
  for (std::size_t r = 0; r <= n_info; ++r) {
    post.ratios[r] = static_cast<double>(r) / static_cast<double>(n_info);
  }
  for (std::size_t m = 0; m <= total; ++m) {
    if (prior[m] == 0.0) continue;
    const SiftExact ex = exact_sift_probability(m, config, kind);
    for (std::size_t r = 0; r <= n_info; ++r) post.posterior[r] += prior[m] * ex.residual_joint[r];
  }
  post.pass_probability = std::accumulate(post.posterior.begin(), post.posterior.end(), 0.0);
  if (post.pass_probability <= 0.0) {
    post.never_passes = true;
    std::fill(post.posterior.begin(), post.posterior.end(), 0.0);
    return post;
  }
  const double limit = 2.0 * config.e_cor;
  for (std::size_t r = 0; r <= n_info; ++r) {
    post.posterior[r] /= post.pass_probability;
    if (post.ratios[r] > limit + 1e-12) post.mass_above_2e_cor += post.posterior[r];
  }
  return post;
}

double log_binomial(std::size_t n, std::size_t k) {
  if (k > n) {
    throw std::domain_error("binomial coefficient with k > n");
  }
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace qkdlab
