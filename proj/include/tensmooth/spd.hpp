#pragma once

// SPD tensors and the three geometries used for smoothing: Euclidean,
// log-Euclidean and affine-invariant.

#include <string_view>

#include "tensmooth/linalg.hpp"

namespace tensmooth {

inline constexpr double kDefaultSpdFloor = 1e-12;

/// Symmetric positive definite matrix. Construction validates that every
/// eigenvalue exceeds `floor`; values failing the check are rejected, never
/// clamped.
class SpdTensor {
 public:
  SpdTensor() = default;
  explicit SpdTensor(const SymMatrix& m, double floor = kDefaultSpdFloor);

  /// Wraps a matrix that is SPD by construction (exp of a symmetric matrix,
  /// congruence of an SPD matrix). No eigenvalue check.
  static SpdTensor unchecked(const SymMatrix& m);
  static SpdTensor identity(int n) { return unchecked(SymMatrix::identity(n)); }
  static SpdTensor diagonal(std::initializer_list<double> d) { return SpdTensor(SymMatrix::diagonal(d)); }

  int dim() const { return m_.dim(); }
  double operator()(int i, int j) const { return m_(i, j); }
  const SymMatrix& matrix() const { return m_; }
  operator const SymMatrix&() const { return m_; }  // NOLINT(google-explicit-constructor)

  double determinant() const;

 private:
  SymMatrix m_;
};

/// True when every eigenvalue of m is above floor.
bool is_spd(const SymMatrix& m, double floor = kDefaultSpdFloor);

/// Throws std::domain_error when the input is not SPD.
SymMatrix mat_log(const SymMatrix& s);
SpdTensor mat_exp(const SymMatrix& m);
SpdTensor mat_pow(const SpdTensor& s, double p);
SpdTensor mat_sqrt(const SpdTensor& s);
SpdTensor mat_inv_sqrt(const SpdTensor& s);
SpdTensor mat_inverse(const SpdTensor& s);

enum class Metric { euclidean, log_euclidean, affine };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view name);

/// Euclidean: Frobenius norm of X - Y. Log-Euclidean: Frobenius norm of
/// log X - log Y. Affine: [tr log^2(X^{-1/2} Y X^{-1/2})]^{1/2}.
double distance(Metric metric, const SpdTensor& x, const SpdTensor& y);

/// Riemannian log map at X under the affine-invariant metric.
SymMatrix affine_log_map(const SpdTensor& x, const SpdTensor& y);
/// Riemannian exp map at X under the affine-invariant metric.
SpdTensor affine_exp_map(const SpdTensor& x, const SymMatrix& s);

/// Point at fraction t in [0, 1] of the affine-invariant geodesic from X to Y:
/// X^{1/2} (X^{-1/2} Y X^{-1/2})^t X^{1/2}.
SpdTensor affine_geodesic(const SpdTensor& x, const SpdTensor& y, double t);

/// Eigenvalues floored at max(floor_scale * trace / N, 1e-9). Used
/// where an estimate that may be indefinite must feed an SPD-only metric.
SpdTensor project_spd(const SymMatrix& m, double floor_scale = 1e-6);

}  // namespace tensmooth
