#pragma once

#include <cstdint>
#include <limits>

namespace cars {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Purpose tags keep streams for different consumers disjoint.
enum class StreamTag : std::uint64_t {
  subdomain_draw = 1,
  in_cell_point = 2,
  oversample_draw = 3,
  oversample_point = 4,
  ga_init = 16,
  ga_variation = 17,
  ga_selection = 18,
  bench = 32,
};

/// Counter-based random stream.
///
/// A stream is identified by (seed, tag, a, b); the values it yields depend
/// only on that key and the position within the stream, never on the order in
/// which other streams were consumed. This is what lets the engine draw
/// sub-domains for sample i of iteration t independently of evaluation order.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0,
             std::uint64_t b = 0) noexcept
      : key_(mix64(mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) ^
                         static_cast<std::uint64_t>(tag)) ^
                   a) ^
             mix64(b + 0x2545f4914f6cdd1dULL)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return mix64(key_ + 0x632be59bd9b4e019ULL * ++counter_); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n > 0. Lemire's multiply-shift; bias is below
  // 2^-64 * n and irrelevant at our sizes.
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

  std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace cars
