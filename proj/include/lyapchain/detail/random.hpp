#pragma once

#include <cstdint>
#include <limits>

namespace lyapchain {

/// SplitMix64. Tiny state, so every sample or trajectory gets its own stream keyed by
/// (seed, index) and results do not depend on scheduling.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0) {
  SplitMix64 mix(seed ^ (0x632be59bd9b4e019ULL * (salt + 1)));
  const std::uint64_t a = mix();
  SplitMix64 mix2(a + index * 0xd1342543de82ef95ULL);
  mix2();
  return mix2();
}

inline SplitMix64 stream(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0) {
  return SplitMix64(stream_seed(seed, index, salt));
}

}  // namespace lyapchain
