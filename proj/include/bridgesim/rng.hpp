#pragma once

#include <cstdint>

namespace bridgesim {

// Counter-based SplitMix64 generator. Each path gets its own stream derived
// by hashing (seed, stream), so per-path draws are independent and replay is
// deterministic regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // decorrelate the stream id before combining with the user seed
  static std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix(seed + 0x9e3779b97f4a7c15ull * (stream + 1));
  }

  static Rng for_stream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(stream_seed(seed, stream));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  // uniform on (0,1), strictly interior so the inverse CDF stays finite
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // standard normal via the inverse CDF (Wichura's AS241, double precision)
  double next_normal() { return normal_quantile(next_uniform()); }

  static double normal_quantile(double p);

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

}  // namespace bridgesim
