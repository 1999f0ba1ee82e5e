#ifndef EHNET_RNG_HPP_
#define EHNET_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>

namespace ehnet {

// Deterministic pseudo-random source. Identical (seed, stream) pairs produce
// identical draw sequences on every platform; the uniform/exponential
// transforms are hand-rolled because std:: distribution output is
// implementation-defined.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : engine_(mix(seed, stream)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unit-mean exponential.
  double exponential() { return -std::log1p(-uniform01()); }

 private:
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over both words
    auto scramble = [](std::uint64_t z) {
      z += 0x9e3779b97f4a7c15ULL;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      return z ^ (z >> 31);
    };
    return scramble(seed) ^ scramble(scramble(stream) + 0x9e3779b97f4a7c15ULL);
  }

  std::mt19937_64 engine_;
};

}  // namespace ehnet

#endif  // EHNET_RNG_HPP_
