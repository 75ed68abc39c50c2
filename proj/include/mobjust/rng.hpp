#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mobjust {

/// SplitMix64 finalizer (Steele, Lea, Flood). Used for seeding and for
/// deriving independent substreams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// xorshift64* (Vigna): shifts 12, 25, 27 and multiplier
/// 0x2545F4914F6CDD1D. The state is seeded with splitmix64(seed) and
/// never zero. Every draw below is defined in terms of next() so another
/// implementation with the same constants reproduces the stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
  }

  /// Independent stream number `stream` under `seed`.
  static Rng derive(std::uint64_t seed, std::uint64_t stream) {
    return Rng(seed ^ splitmix64(stream + 0xD1B54A32D192ED03ULL));
  }

  std::uint64_t next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  /// Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<double>(hi - lo + 1);
    auto v = lo + static_cast<std::int64_t>(uniform() * span);
    return v > hi ? hi : v;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Box-Muller, one value per call (two uniforms consumed).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential(double mean) { return -mean * std::log(1.0 - uniform()); }

  /// Sum of n Bernoulli draws.
  std::int64_t binomial(std::int64_t n, double p) {
    std::int64_t k = 0;
    for (std::int64_t i = 0; i < n; ++i) k += bernoulli(p) ? 1 : 0;
    return k;
  }

 private:
  std::uint64_t state_;
};

}  // namespace mobjust
