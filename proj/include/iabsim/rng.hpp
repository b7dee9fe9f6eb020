#pragma once

#include <cstdint>

namespace iabsim {

// Deterministic splitmix64 generator. Used instead of std:: distributions so
// that sequences are identical across standard-library implementations and
// can be split into independent per-entity streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n > 0. Lemire's method with rejection.
  std::uint64_t uniform_index(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t t = -n % n;
      while (lo < t) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::uint64_t state_;
};

// Stable seed derivation for independent streams: stream k of entity i never
// aliases stream k' of entity i' for distinct (tag, index) pairs in practice.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                 std::uint64_t index = 0) {
  auto mix = [](std::uint64_t h, std::uint64_t v) {
    v *= 0x9e3779b97f4a7c15ull;
    v ^= v >> 32;
    return (h ^ v) * 0xff51afd7ed558ccdull + 0x2545f4914f6cdd1dull;
  };
  return mix(mix(master, tag), index);
}

// Stream tags used across the simulator.
namespace rng_tag {
inline constexpr std::uint64_t kPlacement = 1;
inline constexpr std::uint64_t kUeMotion = 2;
inline constexpr std::uint64_t kBlockerMotion = 3;
inline constexpr std::uint64_t kReceiverPick = 4;
inline constexpr std::uint64_t kWeightInit = 5;
inline constexpr std::uint64_t kPolicySample = 6;
inline constexpr std::uint64_t kReplaySample = 7;
}  // namespace rng_tag

}  // namespace iabsim
