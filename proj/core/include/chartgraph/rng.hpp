#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace chartgraph {

/// Seeded generator with platform-independent output. The engine is
/// mt19937_64, whose sequence is fixed by the C++ standard; the
/// derived distributions below are implemented here rather than taken
/// from <random>, whose distributions are implementation-defined.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer in [lo, hi].
  int between(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1)); }
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal via Box-Muller; no cached second value.
  double normal();

  /// Independent child stream, deterministic in (seed, stream).
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used for seed derivation and hashing.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace chartgraph
