#pragma once

#include <cstdint>
#include <limits>

namespace qkdlab {

/// SplitMix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent random streams used by one trial. The numeric values are part of
/// the report format: changing them changes every replayed transcript.
enum class Substream : std::uint64_t {
  plan = 1,     // which pairs are checked
  basis = 2,    // Z/X choice per checked pair
  outcome = 3,  // measurement outcome sampling
  attack = 4,   // random attack / ensemble generation
  sift = 5,     // sifting Monte Carlo
};

/// Counter-based generator.
///
/// The key is derived from (seed, trial, substream) as
///   key = mix64(mix64(mix64(seed) ^ (trial * 0x9e3779b97f4a7c15)) ^ (stream * 0xd1b54a32d192ed03))
/// and the i-th output (i = 0, 1, ...) is mix64(key + (i + 1) * 0x9e3779b97f4a7c15).
/// An output depends only on (key, i), so any trial can be regenerated in isolation
/// and trials can be distributed across threads in any order.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}
  CounterRng(std::uint64_t seed, std::uint64_t trial, Substream stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Uniform integer in [0, bound). Rejection sampling, so the result does not
  /// depend on the standard library's distribution implementations.
  std::uint64_t below(std::uint64_t bound);

  bool coin() noexcept { return ((*this)() >> 63) != 0; }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// The substreams owned by one trial of an experiment.
struct TrialStreams {
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;

  CounterRng stream(Substream s) const noexcept { return CounterRng(seed, trial, s); }
};

}  // namespace qkdlab
