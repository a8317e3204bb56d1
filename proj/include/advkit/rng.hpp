#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace advkit {

/// Seeded random source whose output is identical on every platform: the
/// engine is the standard-specified mt19937_64 and every distribution is
/// implemented here rather than taken from <random>, whose distributions are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; one draw per call.
  double normal();

  // Unbiased integer in [0, n).
  std::size_t index(std::size_t n);

  // Fisher-Yates.
  void shuffle(std::span<std::size_t> items);

 private:
  std::mt19937_64 engine_;
};

/// Independent child seed for stream `stream` of `base` (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace advkit
