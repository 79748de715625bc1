#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace priornet {

// Deterministic random source. All stochastic code receives one explicitly;
// substreams are derived by hashing (seed, stream) so results never depend on
// evaluation order or on global state.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  static uint64_t mix(uint64_t a, uint64_t b) {
    return splitmix(splitmix(a) ^ (b + 0x9e3779b97f4a7c15ULL));
  }

  static Rng derive(uint64_t seed, uint64_t stream) { return Rng(mix(seed, stream)); }

  uint64_t next() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi], inclusive. Rejection sampling, unbiased.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    const uint64_t range = static_cast<uint64_t>(hi - lo) + 1;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    uint64_t r = gen_();
    while (r >= limit) r = gen_();
    return lo + static_cast<int64_t>(r % range);
  }

  // Standard normal via Box-Muller. Two uniforms per draw, no cached state,
  // so the stream is reproducible regardless of call pattern.
  double normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 gen_;
};

}  // namespace priornet
