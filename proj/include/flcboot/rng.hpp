#pragma once

#include <cmath>
#include <cstdint>

namespace flcboot {

// Counter-based pseudo-random stream with cheap splitting.
//
// A stream is identified by a 64-bit key; output i is a strong 64-bit mix of
// key + i*gamma (the SplitMix64 construction). split(j) derives the key of an
// independent child stream from (key, j) without touching this stream's
// counter, so a simulation can lay out streams by (seed, scenario, replicate,
// method) and reproduce results under any parallel schedule.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  static RngStream root(std::uint64_t seed) { return RngStream(mix(seed + kSalt), 0); }

  // Child stream j; deterministic, independent of this stream's position.
  RngStream split(std::uint64_t j) const {
    return RngStream(mix(key_ ^ mix((j + 1) * kGamma + kSalt)), 0);
  }

  std::uint64_t next_u64() {
    ++counter_;
    return mix(key_ + counter_ * kGamma);
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound); bound >= 1. Rejection keeps it unbiased.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
    for (;;) {
      const std::uint64_t v = next_u64();
      if (v < limit) return v % bound;
    }
  }

  // Standard normal via Box-Muller; two uniforms per draw, no cached state.
  double next_normal() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kSalt = 0x632be59bd9b4e019ULL;

  // SplitMix64 finalizer (Stafford Mix13).
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace flcboot
