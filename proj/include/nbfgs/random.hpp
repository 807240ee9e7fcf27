#pragma once

#include <cstdint>

namespace nbfgs {

// Counter-based SplitMix64 stream: draw n of a stream seeded with s is
// mix(s + (n + 1) * golden_gamma), so every value is a pure function of
// (seed, counter). All noise and rotations in the library come from here;
// the output sequence is part of the reproducibility contract.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed = 0) : seed_(seed) {}

  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Value at an arbitrary position; does not touch the counter.
  constexpr std::uint64_t at(std::uint64_t counter) const {
    return mix(seed_ + (counter + 1) * kGamma);
  }

  std::uint64_t next_u64() { return at(counter_++); }

  // Uniform on [0, 1) with 53 random bits.
  double next_unit();

  // Standard normal (Box-Muller, one draw per pair of uniforms, no caching).
  double next_gaussian();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

// Derives an independent stream seed for a labelled purpose.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label) {
  return CounterRng::mix(seed ^ CounterRng::mix(label + CounterRng::kGamma));
}

}  // namespace nbfgs
