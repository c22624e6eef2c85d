#pragma once

#include <cstdint>
#include <random>

#include "gaplm/types.hpp"

namespace gaplm {

/// Deterministic RNG with counter-based stream splitting, so replications
/// can run on any number of workers and still draw identical values.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(mix(seed, 0x9e3779b97f4a7c15ull)) {}

  /// splitmix64-style mixing; derive per-replication streams with
  /// Rng(Rng::mix(study_seed, replication_index)).
  static uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }

  Vector normal_vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  /// Draw from N(0, Sigma) via the Cholesky factor of Sigma.
  Vector mvn(const Matrix& chol_lower) {
    return chol_lower * normal_vector(static_cast<int>(chol_lower.rows()));
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace gaplm
