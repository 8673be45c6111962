#ifndef LSYSINFER_RNG_HPP
#define LSYSINFER_RNG_HPP

#include <cmath>
#include <cstdint>

namespace lsysinfer {

// SplitMix64-based counter RNG. Substreams are keyed by (seed, stream ids),
// so replicate b of a bootstrap always sees the same draws no matter how
// work is scheduled across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ULL)) {}

  static std::uint64_t substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t x = mix(seed + 0x9e3779b97f4a7c15ULL);
    x = mix(x ^ mix(a + 0xbf58476d1ce4e5b9ULL));
    x = mix(x ^ mix(b + 0x94d049bb133111ebULL));
    return x;
  }

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  double uniform01() {  // in [0, 1)
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  std::uint32_t bounded(std::uint32_t n) {  // in [0, n)
    return static_cast<std::uint32_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  double normal() {
    // Box-Muller; the sine mate is discarded to keep the stream stateless.
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::uint64_t state_;
};

}  // namespace lsysinfer

#endif
