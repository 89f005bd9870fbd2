// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace nbo {

/// Seeded RNG used by the data/model generators and tests. Draws are built
/// directly from mt19937_64 output words instead of std::*_distribution so
/// that identical seeds give identical streams on every standard library.
class Rng {
public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  uint64_t index(uint64_t n) { return gen_() % n; }

  bool chance(double p) { return uniform() < p; }

private:
  std::mt19937_64 gen_;
};

}  // namespace nbo
