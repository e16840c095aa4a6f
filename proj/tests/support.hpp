#pragma once

#include <algorithm>
#include <cmath>
#include <vector>
#include <filesystem>
#include <numbers>
#include <string>

#include <doctest.h>

#include "tensmooth/linalg.hpp"
#include "tensmooth/rng.hpp"
#include "tensmooth/spd.hpp"

namespace test {

using namespace tensmooth;

inline double max_diff(const SymMatrix& a, const SymMatrix& b) { return (a - b).dense().max_abs(); }

/// Rotation by `deg` degrees about z.
inline Matrix rotation_z(double deg) {
  const double a = deg * std::numbers::pi / 180.0;
  Matrix r = Matrix::identity(3);
  r(0, 0) = std::cos(a);
  r(0, 1) = -std::sin(a);
  r(1, 0) = std::sin(a);
  r(1, 1) = std::cos(a);
  return r;
}

/// Haar-ish random rotation from the QR of a Gaussian matrix (Gram-Schmidt).
inline Matrix random_rotation(RandomStream& rng) {
  Matrix q(3);
  for (int j = 0; j < 3; ++j) {
    Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    for (int k = 0; k < j; ++k) {
      double d = 0.0;
      for (int i = 0; i < 3; ++i) d += v[i] * q(i, k);
      for (int i = 0; i < 3; ++i) v[i] -= d * q(i, k);
    }
    const double n = std::hypot(v[0], v[1], v[2]);
    for (int i = 0; i < 3; ++i) q(i, j) = v[i] / n;
  }
  return q;
}

inline SpdTensor random_spd(RandomStream& rng, double lo = 0.2, double hi = 5.0) {
  const double l[3] = {lo + (hi - lo) * rng.uniform(), lo + (hi - lo) * rng.uniform(), lo + (hi - lo) * rng.uniform()};
  return SpdTensor(congruence(random_rotation(rng), SymMatrix::diagonal({l[0], l[1], l[2]})));
}

inline SymMatrix random_sym(RandomStream& rng, double scale = 1.0) {
  SymMatrix s(3);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) s.set(i, j, scale * rng.normal());
  return s;
}

inline std::string scratch_dir(const std::string& name) {
  const auto p = std::filesystem::path(TENSMOOTH_TEST_DIR) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace test

namespace test {

/// Asymptotic Kolmogorov-Smirnov p-value for statistic d on n samples.
inline double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

/// Sup distance between the empirical CDF of `x` (sorted in place) and `cdf`.
template <class Cdf>
double ks_statistic(std::vector<double>& x, Cdf&& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

inline Moments moments(const std::vector<double>& v) {
  double s = 0.0, s2 = 0.0;
  for (double x : v) s += x;
  const double n = static_cast<double>(v.size());
  const double m = s / n;
  for (double x : v) s2 += (x - m) * (x - m);
  return {m, std::sqrt(s2 / (n - 1.0) / n)};
}

}  // namespace test
