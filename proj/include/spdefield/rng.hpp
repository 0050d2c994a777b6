#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace spdefield {

// Deterministic random stream.  Distributions are implemented here rather
// than with std:: distribution objects so that a given seed produces the
// same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(mix(seed)), base_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream)
      : eng_(mix(mix(seed) + 0x9e3779b97f4a7c15ULL * (stream + 1))),
        base_(seed) {}

  // Child stream independent of the parent's future draws.
  Rng fork(std::uint64_t stream) const { return Rng(base_, stream); }

  double uniform01() {
    // 53-bit mantissa in [0, 1).
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Marsaglia polar method; rejection keeps the stream deterministic.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  // Uniform integer in [0, n); n > 0.  Rejection sampling avoids modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 eng_;
  std::uint64_t base_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace spdefield
