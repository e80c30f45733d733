#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace kdpa {

namespace detail {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finaliser
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based generator: the i-th output of a stream is a pure function of
/// (key, i), so substreams for (seed, trial) can be created in any order on
/// any thread and still reproduce the same draws.
///
/// Satisfies std::uniform_random_bit_generator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(detail::mix64(seed ^ detail::mix64(stream + detail::kGoldenGamma))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGoldenGamma);
  }

  /// Uniform on the open interval (0, 1).
  constexpr double uniform_open() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound), bound > 0, via Lemire's rejection method.
  std::uint64_t uniform_index(std::uint64_t bound) {
    unsigned __int128 product = static_cast<unsigned __int128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(product);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        product = static_cast<unsigned __int128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Moves a uniformly random `count`-subset of `items` to its front (partial
/// Fisher-Yates).
template <class T>
void sample_front(std::span<T> items, std::size_t count, CounterRng& rng) {
  for (std::size_t i = 0; i < count && i + 1 < items.size(); ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_index(items.size() - i));
    std::swap(items[i], items[j]);
  }
}

}  // namespace kdpa
