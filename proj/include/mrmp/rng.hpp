#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mrmp {

/// Seeded generator with portable distributions.
///
/// std::*_distribution output is implementation-defined, so every draw here
/// is built directly from the mt19937_64 stream; identical seeds give
/// identical values on any platform, which the reproducibility contracts
/// rely on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; one value per call for simplicity.
  double gaussian(double mean = 0.0, double std = 1.0) {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + std * r * std::cos(2.0 * M_PI * u2);
  }

  // Inverse-CDF sampling.
  double laplace(double mean = 0.0, double scale = 1.0) {
    const double u = uniform() - 0.5;
    const double s = u < 0 ? -1.0 : 1.0;
    return mean - scale * s * std::log(1.0 - 2.0 * std::abs(u));
  }

  int index(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = gen_() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace mrmp
