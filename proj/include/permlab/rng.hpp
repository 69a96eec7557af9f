#pragma once

#include <cstdint>
#include <random>

namespace permlab {

/// One step of SplitMix64 (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Mixes two 64-bit keys into one seed.
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x632BE59BD9B4E019ULL));
}

struct TrialSeed {
  std::uint64_t master_seed = 0;
  std::uint64_t trial_index = 0;

  std::uint64_t derived() const { return mix_seed(master_seed, trial_index); }
};

/// Per-trial generator: std::mt19937_64 seeded with mix_seed(master, index).
/// mt19937_64's output sequence is fixed by the C++ standard; the
/// conversions below are local so results do not depend on the standard
/// library's distribution implementations.
class TrialRng {
 public:
  explicit TrialRng(TrialSeed seed) : engine_(seed.derived()) {}
  explicit TrialRng(std::uint64_t raw_seed) : engine_(raw_seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on the open interval (0, 1): (k + 1/2) / 2^53.
  double uniform01() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by rejection of the biased tail.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = -bound % bound;  // 2^64 mod bound
    while (true) {
      std::uint64_t x = engine_();
      if (x >= limit) return x % bound;
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace permlab
