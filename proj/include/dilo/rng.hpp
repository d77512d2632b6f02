#ifndef DILO_RNG_HPP
#define DILO_RNG_HPP

#include <cmath>
#include <cstdint>

namespace dilo {

/// SplitMix64 step; used to expand and combine seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic PCG32 generator. The standard library engines are
/// portable but their distributions are not, so all sampling used in
/// reproducible pipelines goes through this class.
class Rng {
public:
  explicit Rng(std::uint64_t seed) {
    state_ = 0;
    inc_ = (mix64(seed ^ 0x5851f42d4c957f2dULL) << 1u) | 1u;
    next_u32();
    state_ += mix64(seed);
    next_u32();
  }

  /// Stream for one sample of a batch: seed XOR sample index, expanded.
  static Rng derived(std::uint64_t seed, std::uint64_t index) {
    return Rng(seed ^ index);
  }

  std::uint32_t next_u32() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    std::uint32_t xorshifted =
        static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
  }

  std::uint64_t next_u64() {
    std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform double in [0,1) with 53 random bits.
  double uniform() {
    std::uint64_t a = next_u32() >> 5; // 27 bits
    std::uint64_t b = next_u32() >> 6; // 26 bits
    return static_cast<double>((a << 26) | b) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] inclusive, via rejection for exactness.
  int uniform_int(int lo, int hi) {
    std::uint32_t range = static_cast<std::uint32_t>(hi - lo) + 1u;
    if (range == 0)
      return static_cast<int>(next_u32()); // full 32-bit range
    std::uint32_t limit = UINT32_MAX - UINT32_MAX % range;
    std::uint32_t v;
    do {
      v = next_u32();
    } while (v >= limit);
    return lo + static_cast<int>(v % range);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal, Box-Muller with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace dilo

#endif
