#pragma once
#include <cstdint>
#include <vector>

namespace finmdp {

/// Counter-based pseudo-random stream (SplitMix64). Streams are derived purely
/// from integer keys, so a batch of trajectories can be sampled in any order or
/// degree of parallelism with identical results: trajectory i of update step n
/// always draws from substream(master, n, i).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : state_(key) {}

  static CounterRng substream(std::uint64_t master, std::uint64_t stream,
                              std::uint64_t sub) {
    std::uint64_t k = scramble(master);
    k = scramble(k ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    k = scramble(k ^ (0xc2b2ae3d27d4eb4fULL * (sub + 1)));
    return CounterRng(k);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return finalize(state_);
  }

  /// Uniform draw in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Index sampled from a probability vector by CDF inversion; consumes one draw.
  int categorical(const std::vector<double>& p) {
    const double u = next_double();
    double c = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      c += p[i];
      if (u < c) return static_cast<int>(i);
    }
    return static_cast<int>(p.size()) - 1;
  }

 private:
  static std::uint64_t finalize(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }
  static std::uint64_t scramble(std::uint64_t x) {
    return finalize(x + 0x9e3779b97f4a7c15ULL);
  }

  std::uint64_t state_;
};

}  // namespace finmdp
