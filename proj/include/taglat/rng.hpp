#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace taglat {

// Deterministic, counter-based random stream built on the splitmix64 mixer.
//
// Reproducibility contract: for a fixed (seed, stream_id) the draw sequence is
// identical across runs and independent of any other stream, so per-trial
// substreams can be evaluated in any order or in parallel. The standard
// library distributions are avoided on purpose; their sequences are
// implementation-defined.
//
// Algorithm name reported in output metadata: "splitmix64+box-muller".

inline constexpr const char* kRngAlgorithm = "splitmix64+box-muller";

namespace detail {

inline constexpr std::uint64_t kSplitmixGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Derives a well-scrambled substream seed from a base seed and a stream id.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream_id) {
  return detail::mix64(seed + detail::kSplitmixGamma) ^
         detail::mix64(stream_id * 0xD2B74407B1CE6E93ULL + 0x8BB84B93962EACC9ULL);
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : state_(derive_stream_seed(seed, stream_id)) {}

  std::uint64_t next_u64() {
    state_ += detail::kSplitmixGamma;
    return detail::mix64(state_);
  }

  // Uniform double in [0, 1), 53-bit resolution.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound), unbiased via rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("RandomStream::next_below: bound must be > 0");
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % bound;
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x < limit) return x % bound;
    }
  }

  // Normal draw via Box-Muller; the spare value is cached within the stream.
  double next_normal(double mean = 0.0, double sd = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + sd * spare_;
    }
    double u1 = next_unit();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return mean + sd * r * std::cos(theta);
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace taglat
