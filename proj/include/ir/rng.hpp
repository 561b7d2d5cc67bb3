#pragma once

// Counter-based pseudorandom generator used by every seeded operation.
//
// Output k (k = 0, 1, 2, ...) of stream s under seed S is
//
//   key    = mix64(S + s * 0xD1B54A32D192ED03)
//   out(k) = mix64(key + (k + 1) * 0x9E3779B97F4A7C15)
//
// where mix64 is the SplitMix64 finalizer:
//
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z =  z ^ (z >> 31)
//
// All arithmetic is modulo 2^64. Bounded draws use rejection sampling
// (see uniform_below) and shuffles are descending Fisher-Yates, so any
// reimplementation following these rules reproduces the same partitions.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>

namespace ir {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stream identifiers. Each seeded decision draws from its own stream so
/// that, e.g., the partial-sampling step never perturbs the fold shuffle.
namespace stream {
inline constexpr std::uint64_t kShuffle = 0;
inline constexpr std::uint64_t kPartialSample = 1;
inline constexpr std::uint64_t kSynth = 2;
constexpr std::uint64_t replacement_fold(std::uint64_t fold) noexcept { return (1ULL << 32) + fold; }
constexpr std::uint64_t incremental_block(std::uint64_t block) noexcept { return (2ULL << 32) + block; }
constexpr std::uint64_t synth_column(std::uint64_t column) noexcept { return (3ULL << 32) + column; }
}  // namespace stream

class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : key_(mix64(seed + stream_id * 0xD1B54A32D192ED03ULL)) {}

  constexpr std::uint64_t next() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform integer in [0, bound). bound == 0 returns 0.
  constexpr std::uint64_t uniform_below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    // Reject the lowest (2^64 mod bound) values so every residue is equally likely.
    const std::uint64_t threshold = (0 - bound) % bound;
    std::uint64_t x = next();
    while (x < threshold) x = next();
    return x % bound;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform01() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) noexcept { return uniform01() < p; }

  /// Standard normal via Box-Muller (cosine branch only, two draws per call).
  double normal() noexcept {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

template <typename T>
void shuffle(std::span<T> items, CounterRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace ir
