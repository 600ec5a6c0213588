#pragma once

#include <cmath>
#include <cstdint>

namespace dyadlab {

// Deterministic, platform-independent PRNG (xoshiro256** seeded via splitmix64).
// <random> distributions are not bit-stable across standard libraries, and suite
// reports must be byte-identical for a fixed seed, so everything is hand-rolled.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : s_) s = splitmix64(x);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double log_uniform(double a, double b) {
    return std::exp(uniform(std::log(a), std::log(b)));
  }

  // standard normal via Box-Muller (no cached spare, keeps state trivially reproducible)
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  int index(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  bool coin() { return (next() & 1u) != 0; }

  int sign() { return coin() ? 1 : -1; }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97f4A7C15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::uint64_t s_[4];
};

// Splittable stream derivation: experiment i of a suite gets derive_seed(master, i).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t x = master ^ (0xA0761D6478BD642Full * (stream + 1));
  return Rng::splitmix64(x);
}

}  // namespace dyadlab
