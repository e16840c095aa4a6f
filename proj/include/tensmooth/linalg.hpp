#pragma once

// Small dense and symmetric matrices (dimension <= 6) with fixed inline
// storage, plus the cyclic Jacobi eigensolver everything else builds on.

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace tensmooth {

inline constexpr int kMaxDim = 6;

using Vec3 = std::array<double, 3>;
using Vec6 = std::array<double, 6>;

/// Square dense matrix of runtime dimension n <= kMaxDim, row-major.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(int n);

  static Matrix identity(int n);
  static Matrix diagonal(std::span<const double> d);

  int dim() const { return n_; }
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * kMaxDim + j)]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * kMaxDim + j)]; }

  Matrix transpose() const;
  double trace() const;
  double frobenius_norm() const;
  double max_abs() const;
  bool is_finite() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }
  friend Matrix operator*(const Matrix& a, const Matrix& b);

 private:
  int n_ = 0;
  std::array<double, kMaxDim * kMaxDim> a_{};
};

/// Symmetric matrix stored as its n(n+1)/2 upper-triangle entries.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n);
  /// Symmetrizes: (m + m^T) / 2.
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(int n);
  static SymMatrix diagonal(std::span<const double> d);
  static SymMatrix diagonal(std::initializer_list<double> d);
  static SymMatrix zero(int n) { return SymMatrix(n); }

  int dim() const { return n_; }
  double operator()(int i, int j) const { return v_[slot(i, j)]; }
  void set(int i, int j, double value) { v_[slot(i, j)] = value; }
  /// Packed upper-triangle storage, row by row.
  std::span<const double> packed() const { return {v_.data(), packed_size()}; }
  std::size_t packed_size() const { return static_cast<std::size_t>(n_ * (n_ + 1) / 2); }

  Matrix dense() const;
  double trace() const;
  double frobenius_norm() const;
  bool is_finite() const;

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double s);
  /// this += s * o
  void add_scaled(const SymMatrix& o, double s);

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

 private:
  std::size_t slot(int i, int j) const {
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(i * n_ - i * (i - 1) / 2 + (j - i));
  }
  int n_ = 0;
  std::array<double, kMaxDim * (kMaxDim + 1) / 2> v_{};
};

/// Eigenpairs sorted by non-increasing eigenvalue; column j of `vectors`
/// pairs with `values[j]`.
struct EigDecomp {
  int n = 0;
  std::array<double, kMaxDim> values{};
  Matrix vectors;

  std::span<const double> eigenvalues() const { return {values.data(), static_cast<std::size_t>(n)}; }
  double min_value() const { return values[static_cast<std::size_t>(n - 1)]; }
  double max_value() const { return values[0]; }
};

/// Cyclic Jacobi eigendecomposition. Each eigenvector's first component
/// with magnitude above 1e-12 is made positive so results are reproducible.
/// Throws std::invalid_argument on non-finite input.
EigDecomp sym_eig(const SymMatrix& s);

/// E diag(f(lambda)) E^T for a decomposition and per-eigenvalue values.
SymMatrix reconstruct(const EigDecomp& e, std::span<const double> mapped);

template <class F>
SymMatrix spectral_map(const EigDecomp& e, F&& f) {
  std::array<double, kMaxDim> mapped{};
  for (int i = 0; i < e.n; ++i) mapped[static_cast<std::size_t>(i)] = f(e.values[static_cast<std::size_t>(i)]);
  return reconstruct(e, {mapped.data(), static_cast<std::size_t>(e.n)});
}

/// g s g^T
SymMatrix congruence(const Matrix& g, const SymMatrix& s);

/// Product of two symmetric matrices as a dense matrix.
Matrix operator*(const SymMatrix& a, const SymMatrix& b);

/// Frobenius inner product tr(a b).
double trace_product(const SymMatrix& a, const SymMatrix& b);

/// Cholesky solve of an SPD system a x = b (n <= 6). Throws
/// std::domain_error when a is not numerically positive definite.
std::array<double, kMaxDim> cholesky_solve(const Matrix& a, std::span<const double> b);

/// Inverse of an SPD matrix via Cholesky.
Matrix spd_inverse(const Matrix& a);

/// 2-norm condition number of a symmetric positive definite matrix.
double condition_number(const SymMatrix& s);

/// Largest absolute eigenvalue of a symmetric matrix.
double operator_norm(const SymMatrix& s);

std::string to_string(const SymMatrix& s);

}  // namespace tensmooth
