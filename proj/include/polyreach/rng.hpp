#pragma once

#include <cstdint>
#include <random>

#include "polyreach/base.hpp"

namespace polyreach {

// splitmix64; used to derive independent child seeds from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic RNG wrapper.  `derive(k)` yields a stream independent of the
// parent and of other k, so parallel or reordered consumers stay reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(mix_seed(seed)) {}

  Rng derive(std::uint64_t stream) const { return Rng(mix_seed(seed_ ^ mix_seed(stream + 1))); }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(eng_); }

  Vector unit_vector(int dim) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Vector v(dim);
    double norm2 = 0.0;
    do {
      for (int i = 0; i < dim; ++i) v[i] = nd(eng_);
      norm2 = v.squaredNorm();
    } while (norm2 < 1e-24);
    return v / std::sqrt(norm2);
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

// Radical-inverse Halton point in [0,1)^dim, optionally shifted mod 1.
// Low-discrepancy backbone of the randomized quasi-Monte-Carlo estimators.
inline Vector halton_point(std::uint64_t index, int dim, const Vector* shift = nullptr) {
  static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  if (dim > static_cast<int>(sizeof(kPrimes) / sizeof(kPrimes[0])))
    throw DimensionMismatch("halton_point: dimension above supported limit");
  Vector p(dim);
  for (int d = 0; d < dim; ++d) {
    const int b = kPrimes[d];
    double f = 1.0, r = 0.0;
    std::uint64_t i = index + 1;
    while (i > 0) {
      f /= b;
      r += f * static_cast<double>(i % b);
      i /= b;
    }
    if (shift != nullptr) {
      r += (*shift)[d];
      r -= std::floor(r);
    }
    p[d] = r;
  }
  return p;
}

}  // namespace polyreach
