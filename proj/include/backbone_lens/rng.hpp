#pragma once

#include <cstdint>
#include <string_view>

namespace backbone_lens {

// 64-bit FNV-1a over a node id. Weight streams are keyed by (seed, id) so
// isomorphic graph expansions sharing ids receive identical weights.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// splitmix64. Fixed algorithm, not std::<engine>, so stores are bit-identical
// across platforms and standard-library versions.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 bits of mantissa.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

 private:
  std::uint64_t state_;
};

}  // namespace backbone_lens
