#pragma once

// Counter-based random streams: every draw is a pure function of
// (master seed, voxel, measurement, counter), so results do not depend on
// thread count or traversal order.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace tensmooth {

struct RngSpec {
  std::uint64_t seed = 20100101;
};

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

class RandomStream {
 public:
  RandomStream(RngSpec spec, std::uint64_t voxel, std::uint64_t measurement)
      : key_(detail::mix64(detail::mix64(detail::mix64(spec.seed) ^ voxel) ^ (measurement * 0xd1b54a32d192ed03ULL))) {}

  std::uint64_t next_u64() { return detail::mix64(key_ ^ detail::mix64(counter_++)); }

  /// Uniform on (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal (Box-Muller; the second variate is cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Chi-square with integer degrees of freedom as a sum of squared normals.
  double chi_square(int dof) {
    double s = 0.0;
    for (int i = 0; i < dof; ++i) {
      const double z = normal();
      s += z * z;
    }
    return s;
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tensmooth
