#pragma once

#include <concepts>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>

namespace qsw {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream. Each (seed, stream index) pair names an
/// independent sequence; the n-th draw is mix64 of a counter, so streams need
/// no shared state and any trajectory can be replayed on its own.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    counter_ += 0x9E3779B97F4A7C15ULL;
    return mix64(key_ + counter_);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stream for trajectory `index` of an ensemble seeded with `master_seed`.
inline RandomStream trajectory_stream(std::uint64_t master_seed, std::uint64_t index) {
  return RandomStream(master_seed, index);
}

/// Uniform double in [0, 1). Uses the top 53 bits for 64-bit generators so the
/// value sequence is identical across standard libraries.
template <std::uniform_random_bit_generator Rng>
double uniform01(Rng& rng) {
  if constexpr (Rng::min() == 0 && Rng::max() == std::numeric_limits<std::uint64_t>::max()) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  } else {
    return std::generate_canonical<double, 53>(rng);
  }
}

/// Index drawn with probability weights[i] / sum(weights). Zero weights are
/// never selected.
template <std::uniform_random_bit_generator Rng>
std::size_t sample_index(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("sample_index: weights sum to zero");
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  // u landed in the rounding gap at the top of the cumulative sum
  return last_positive;
}

}  // namespace qsw
