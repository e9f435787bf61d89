#include "qkdlab/attack_model.hpp"
#include "qkdlab/checking.hpp"
#include "qkdlab/distillation.hpp"
#include "qkdlab/security.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace qkdlab;

PureAttackState attack(std::size_t n_pairs, std::size_t eve_dim, std::size_t terms) {
  CounterRng rng(1, 0, Substream::attack);
  return random_attack(rng, n_pairs, eve_dim, terms);
}

CheckPlan half_plan(std::size_t n_pairs, MeasurementMode mode) {
  std::vector<CheckedPair> pairs;
  for (std::size_t p = 0; p < n_pairs; p += 2) pairs.push_back({p, p % 4 ? CheckBasis::X : CheckBasis::Z});
  return CheckPlan(pairs, mode);
}

void BM_OutcomeDistributionPure(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PureAttackState s = attack(n, 4, 64);
  const CheckPlan plan = half_plan(n, MeasurementMode::nonlocal);
  for (auto _ : state) benchmark::DoNotOptimize(outcome_distribution(s, plan));
}
BENCHMARK(BM_OutcomeDistributionPure)->DenseRange(2, 6, 2);

void BM_OutcomeDistributionLocal(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PureAttackState s = attack(n, 4, 64);
  const CheckPlan plan = half_plan(n, MeasurementMode::local);
  for (auto _ : state) benchmark::DoNotOptimize(outcome_distribution(s, plan));
}
BENCHMARK(BM_OutcomeDistributionLocal)->DenseRange(2, 6, 2);

void BM_OutcomeDistributionBellDiagonal(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const BellDiagonalState s = classicalize(attack(n, 4, 64));
  const CheckPlan plan = half_plan(n, MeasurementMode::nonlocal);
  for (auto _ : state) benchmark::DoNotOptimize(outcome_distribution(s, plan));
}
BENCHMARK(BM_OutcomeDistributionBellDiagonal)->DenseRange(2, 6, 2);

void BM_PartialTrace(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PureState psi = attack(n, 8, 64).joint();
  const std::vector<std::string> keep{"E"};
  for (auto _ : state) benchmark::DoNotOptimize(partial_trace(psi, keep));
}
BENCHMARK(BM_PartialTrace)->DenseRange(1, 4);

void BM_HolevoReport(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PureState psi = attack(n, 4, 16).joint();
  for (auto _ : state) benchmark::DoNotOptimize(holevo_report(psi));
}
BENCHMARK(BM_HolevoReport)->DenseRange(1, 3);

void BM_ExactSift(benchmark::State& state) {
  const auto total = static_cast<std::size_t>(state.range(0));
  const ProtocolConfig cfg{total, 0.04, 0.05, 1, 1, MeasurementMode::nonlocal};
  for (auto _ : state)
    for (std::size_t m = 0; m <= total; ++m) benchmark::DoNotOptimize(exact_sift_probability(m, cfg));
}
BENCHMARK(BM_ExactSift)->Arg(20)->Arg(100)->Arg(400);

void BM_SiftMonteCarlo(benchmark::State& state) {
  const ProtocolConfig cfg{100, 0.04, 0.05, 1, static_cast<std::size_t>(state.range(0)), MeasurementMode::nonlocal};
  for (auto _ : state) benchmark::DoNotOptimize(sift_probability(5, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SiftMonteCarlo)->Arg(10000);

void BM_RunCheckPhase(benchmark::State& state) {
  const auto total = static_cast<std::size_t>(state.range(0));
  const AttackState s = named_attack(PauliChannel{0.05, 0.02, 0.05}, total);
  const ProtocolConfig cfg{total, 0.1, 0.15, 1, 1, MeasurementMode::nonlocal};
  std::uint64_t trial = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_check_phase(s, cfg, TrialStreams{1, trial++}));
}
BENCHMARK(BM_RunCheckPhase)->Arg(4)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
