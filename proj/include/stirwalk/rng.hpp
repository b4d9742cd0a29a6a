#pragma once

#include <cstdint>

namespace stirwalk {

// Independent streams for counter_hash. Values are part of the reproducibility
// contract: changing one changes every seeded result downstream.
enum class Stream : std::uint64_t {
  Field = 1,
  Stripe = 2,
  Sample = 3,
  Fire = 4,
  TieKey = 5,
  Occupancy = 6,
  Coupling = 7,
  Replica = 8,
  Marker = 9,
  Bootstrap = 10,
  Symbol = 11,
};

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based 64-bit hash of (seed, stream, a, b).
///
/// Every random quantity in the library is a pure function of its coordinates,
/// so results do not depend on evaluation order or on how work is split across
/// threads.
constexpr std::uint64_t counter_hash(std::uint64_t seed, Stream stream, std::int64_t a,
                                     std::int64_t b) noexcept {
  std::uint64_t h = mix64(seed + 0x9E3779B97F4A7C15ULL);
  h = mix64(h ^ (static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL));
  h = mix64(h + static_cast<std::uint64_t>(a) * 0x9E3779B97F4A7C15ULL);
  h = mix64(h ^ (static_cast<std::uint64_t>(b) * 0xC2B2AE3D27D4EB4FULL + 0x165667B19E3779F9ULL));
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::int64_t index) noexcept {
  return counter_hash(seed, stream, index, -1);
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t u) noexcept {
  return static_cast<double>(u >> 11) * 0x1.0p-53;
}

/// Exact Bernoulli(p) test on a uniform 64-bit word: u < floor(p * 2^64).
/// p == 1 accepts every word.
class BernoulliCut {
 public:
  BernoulliCut() = default;
  explicit BernoulliCut(double p);

  [[nodiscard]] bool operator()(std::uint64_t u) const noexcept { return always_ || u < cut_; }
  [[nodiscard]] std::uint64_t cut() const noexcept { return cut_; }
  [[nodiscard]] bool always() const noexcept { return always_; }

 private:
  std::uint64_t cut_ = 0;
  bool always_ = false;
};

}  // namespace stirwalk
