#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace fairproj {

/*
 Deterministic random streams.

 Generator: xoshiro256** (Blackman & Vigna), state seeded by four successive
 outputs of splitmix64 starting from the seed. Uniform doubles use the top 53
 bits: (x >> 11) * 2^-53, giving values in [0, 1).

 Normal deviates use the Box-Muller cosine branch with no caching:
   u1 = 1 - uniform(), u2 = uniform(), z = sqrt(-2 ln u1) * cos(2 pi u2)
 so every normal consumes exactly two 64-bit outputs. Any implementation that
 follows these steps reproduces identical streams.

 Independent per-item streams are derived with Rng::stream(seed, index), which
 seeds a fresh generator from splitmix64(seed) xor splitmix64(index + c).
*/
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& s : state_) s = splitmix64(sm);
  }

  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t a = seed;
    std::uint64_t b = index + 0x632be59bd9b4e019ULL;
    return Rng(splitmix64(a) ^ splitmix64(b));
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, k). k must be positive.
  std::uint64_t index(std::uint64_t k) {
    auto i = static_cast<std::uint64_t>(uniform() * static_cast<double>(k));
    return i < k ? i : k - 1;
  }

  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Exp(1) deviate, i.e. Gamma(1, 1).
  double exponential() { return -std::log(1.0 - uniform()); }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
};

}  // namespace fairproj
