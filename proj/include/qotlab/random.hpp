#pragma once

#include <cstdint>
#include <random>

#include "qotlab/measures.hpp"

namespace qotlab {

// Seeded generator with a portable double mapping, so probe sets are the
// same on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

  // Uniform in the closed ball of the given radius, by rejection.
  Point in_ball(int d, double radius = 1.0) {
    Point p(d);
    do {
      for (int k = 0; k < d; ++k) p[k] = uniform(-1.0, 1.0);
    } while (p.squaredNorm() > 1.0);
    return radius * p;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qotlab
