#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "switchstate/linalg.hpp"

namespace switchstate {

// Seeded generator with a fixed, named algorithm. std::mt19937_64's output
// sequence is pinned by the standard; the real-valued mapping below is done by
// hand (rather than std::uniform_real_distribution, which is
// implementation-defined) so draws are identical across toolchains.
class Rng {
 public:
  static constexpr std::string_view kName = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  Vector uniform_vector(Eigen::Index n, double lo, double hi) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

  int bit() { return static_cast<int>(engine_() >> 63); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace switchstate
