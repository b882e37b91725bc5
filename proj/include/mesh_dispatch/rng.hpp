#pragma once

#include <cstdint>
#include <random>

namespace mesh_dispatch {

/// Seeded generator with a draw-to-double mapping that does not depend on the
/// standard library's distribution implementations, so traces are identical
/// across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  int below(int n) { return static_cast<int>(uniform() * n); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mesh_dispatch
