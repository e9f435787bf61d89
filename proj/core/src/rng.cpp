#include "qkdlab/rng.hpp"

#include <stdexcept>

namespace qkdlab {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kStreamMul = 0xd1b54a32d192ed03ULL;
}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t trial, Substream stream) noexcept
    : key_(mix64(mix64(mix64(seed) ^ (trial * kGolden)) ^
                 (static_cast<std::uint64_t>(stream) * kStreamMul))) {}

CounterRng::result_type CounterRng::operator()() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() noexcept {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t bound) {
  if (bound == 0) {
    throw std::domain_error("CounterRng::below: bound must be positive");
  }
  // Reject the top partial block so every residue is equally likely.
  const std::uint64_t limit = max() - (max() % bound + 1) % bound;
  std::uint64_t x = (*this)();
  while (x > limit) {
    x = (*this)();
  }
  return x % bound;
}

}  // namespace qkdlab
