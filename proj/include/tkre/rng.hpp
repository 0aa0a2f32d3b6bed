#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string_view>

namespace tkre {

namespace detail {

// SplitMix64 output function (Steele, Lea & Flood 2014). Full-avalanche
// mixer, also used below to derive independent substreams from
// (seed, index) pairs.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace detail

/// Combines a seed with an arbitrary 64-bit tag into a new, statistically
/// independent seed. Chaining calls derives nested substreams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  return detail::splitmix64_mix(seed ^ detail::splitmix64_mix(tag + detail::kGolden));
}

/// FNV-1a, for folding names into seed derivations.
inline std::uint64_t hash_text(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t hash_f64(double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, sizeof bits);
  return detail::splitmix64_mix(bits + detail::kGolden);
}

/// Deterministic counter-based random stream (SplitMix64).
///
/// All randomness in the library flows through explicit RngStream values;
/// there is no global state. The generator and every sampler built on it
/// are implemented here rather than with <random> distributions, whose
/// output is implementation-defined and would break cross-platform
/// reproducibility of seeded runs.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += detail::kGolden;
    return detail::splitmix64_mix(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1); safe as a log() argument.
  double next_unit_open() {
    double u;
    do {
      u = next_unit();
    } while (u == 0.0);
    return u;
  }

  /// Unbiased uniform integer in [0, bound).
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("next_below: bound must be positive");
    const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x >= threshold) return x % bound;
    }
  }

  /// Uniform integer in [lo, hi], both ends inclusive.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("next_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_below(span));
  }

  /// Standard normal variate, Marsaglia polar method.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_unit() - 1.0;
      v = 2.0 * next_unit() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Substream for learner/row/trial `index` under a master seed.
inline RngStream derive_stream(std::uint64_t seed, std::uint64_t index) {
  return RngStream(mix_seed(seed, index));
}

}  // namespace tkre
