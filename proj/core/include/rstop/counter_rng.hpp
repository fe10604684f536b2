#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace rstop {

/// Philox4x32-10 counter-based block cipher. Stateless: the caller owns the
/// (key, counter) pair, so any block of the stream can be generated in any
/// order on any thread with identical results.
struct Philox4x32 {
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Block encrypt(Block counter, Key key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kMul0} * counter[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * counter[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      counter = {hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1], lo0};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return counter;
  }
};

/// Uniform and normal variates addressed by (seed, stream, index). A stream is
/// one Monte Carlo path (or one generator instance); draws within a stream are
/// indexed consecutively. Independent of call order and thread placement.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  /// Two raw 64-bit words from block `block_index` of the stream.
  std::array<std::uint64_t, 2> words(std::uint64_t block_index) const {
    const Philox4x32::Block c = {
        static_cast<std::uint32_t>(block_index),
        static_cast<std::uint32_t>(block_index >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32)};
    const auto out = Philox4x32::encrypt(c, key_);
    return {out[0] | (std::uint64_t{out[1]} << 32), out[2] | (std::uint64_t{out[3]} << 32)};
  }

  /// Uniform double in the open interval (0, 1), draw index `i`.
  double uniform(std::uint64_t i) const {
    const auto w = words(i / 2);
    return to_unit(w[i % 2]);
  }

  /// Standard normal, draw index `i`. Box-Muller over one Philox block per
  /// pair, so draws 2k and 2k+1 share a block.
  double normal(std::uint64_t i) const {
    const auto w = words(i / 2);
    const double u1 = to_unit(w[0]);
    const double u2 = to_unit(w[1]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    return (i % 2 == 0) ? radius * std::cos(angle) : radius * std::sin(angle);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  // Maps to the centers of 2^53 equal cells: never exactly 0 or 1.
  static double to_unit(std::uint64_t x) {
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_;
};

/// splitmix64-style mixing for deriving independent sub-seeds from a master
/// seed and up to two indices.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (a + 1) + 0xD1B54A32D192ED03ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Sequential convenience wrapper over one stream.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}

  double uniform() { return rng_.uniform(next_++); }
  double normal() { return rng_.normal(next_++); }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in {0, ..., n-1}.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

}  // namespace rstop
