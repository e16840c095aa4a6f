#include "tensmooth/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace tensmooth {

namespace {

void check_dim(int n) {
  if (n < 0 || n > kMaxDim) throw std::invalid_argument("matrix dimension must be in [0, 6], got " + std::to_string(n));
}

void check_same(int a, int b) {
  if (a != b) throw std::invalid_argument("matrix dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

// ---------------------------------------------------------------- Matrix

Matrix::Matrix(int n) : n_(n) { check_dim(n); }

Matrix Matrix::identity(int n) {
  Matrix m(n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(static_cast<int>(d.size()));
  for (int i = 0; i < m.n_; ++i) m(i, i) = d[static_cast<std::size_t>(i)];
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::trace() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += (*this)(i, i);
  return s;
}

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) s += (*this)(i, j) * (*this)(i, j);
  return std::sqrt(s);
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) m = std::max(m, std::abs((*this)(i, j)));
  return m;
}

bool Matrix::is_finite() const {
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      if (!std::isfinite((*this)(i, j))) return false;
  return true;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  check_same(n_, o.n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) (*this)(i, j) += o(i, j);
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  check_same(n_, o.n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) (*this)(i, j) -= o(i, j);
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) (*this)(i, j) *= s;
  return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  check_same(a.dim(), b.dim());
  const int n = a.dim();
  Matrix c(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const double aik = a(i, k);
      for (int j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

// ------------------------------------------------------------- SymMatrix

SymMatrix::SymMatrix(int n) : n_(n) { check_dim(n); }

SymMatrix::SymMatrix(const Matrix& m) : n_(m.dim()) {
  for (int i = 0; i < n_; ++i)
    for (int j = i; j < n_; ++j) set(i, j, 0.5 * (m(i, j) + m(j, i)));
}

SymMatrix SymMatrix::identity(int n) {
  SymMatrix s(n);
  for (int i = 0; i < n; ++i) s.set(i, i, 1.0);
  return s;
}

SymMatrix SymMatrix::diagonal(std::span<const double> d) {
  SymMatrix s(static_cast<int>(d.size()));
  for (int i = 0; i < s.n_; ++i) s.set(i, i, d[static_cast<std::size_t>(i)]);
  return s;
}

SymMatrix SymMatrix::diagonal(std::initializer_list<double> d) {
  return diagonal(std::span<const double>(d.begin(), d.size()));
}

Matrix SymMatrix::dense() const {
  Matrix m(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) m(i, j) = (*this)(i, j);
  return m;
}

double SymMatrix::trace() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += (*this)(i, i);
  return s;
}

double SymMatrix::frobenius_norm() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) {
    s += (*this)(i, i) * (*this)(i, i);
    for (int j = i + 1; j < n_; ++j) s += 2.0 * (*this)(i, j) * (*this)(i, j);
  }
  return std::sqrt(s);
}

bool SymMatrix::is_finite() const {
  return std::all_of(v_.begin(), v_.begin() + static_cast<std::ptrdiff_t>(packed_size()),
                     [](double x) { return std::isfinite(x); });
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  check_same(n_, o.n_);
  for (std::size_t k = 0; k < packed_size(); ++k) v_[k] += o.v_[k];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  check_same(n_, o.n_);
  for (std::size_t k = 0; k < packed_size(); ++k) v_[k] -= o.v_[k];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  for (std::size_t k = 0; k < packed_size(); ++k) v_[k] *= s;
  return *this;
}

void SymMatrix::add_scaled(const SymMatrix& o, double s) {
  check_same(n_, o.n_);
  for (std::size_t k = 0; k < packed_size(); ++k) v_[k] += s * o.v_[k];
}

// ------------------------------------------------------------- Jacobi

EigDecomp sym_eig(const SymMatrix& s) {
  if (!s.is_finite()) throw std::invalid_argument("sym_eig: non-finite matrix entry");
  const int n = s.dim();
  Matrix a = s.dense();
  Matrix v = Matrix::identity(n);

  constexpr int kMaxSweeps = 100;
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Relative threshold keeps small eigenvalues accurate.
        if (std::abs(apq) <= 0.25 * kEps * std::sqrt(std::abs(a(p, p)) * std::abs(a(q, q)))) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        rotated = true;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
    if (!rotated) break;
  }

  std::array<int, kMaxDim> order{};
  std::iota(order.begin(), order.begin() + n, 0);
  std::stable_sort(order.begin(), order.begin() + n, [&](int i, int j) { return a(i, i) > a(j, j); });

  EigDecomp e;
  e.n = n;
  e.vectors = Matrix(n);
  for (int j = 0; j < n; ++j) {
    const int src = order[static_cast<std::size_t>(j)];
    e.values[static_cast<std::size_t>(j)] = a(src, src);
    double sign = 1.0;
    for (int k = 0; k < n; ++k) {
      if (std::abs(v(k, src)) > 1e-12) {
        sign = v(k, src) < 0.0 ? -1.0 : 1.0;
        break;
      }
    }
    for (int k = 0; k < n; ++k) e.vectors(k, j) = sign * v(k, src);
  }
  return e;
}

SymMatrix reconstruct(const EigDecomp& e, std::span<const double> mapped) {
  const int n = e.n;
  SymMatrix out(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double sum = 0.0;
      for (int k = 0; k < n; ++k) sum += e.vectors(i, k) * mapped[static_cast<std::size_t>(k)] * e.vectors(j, k);
      out.set(i, j, sum);
    }
  }
  return out;
}

SymMatrix congruence(const Matrix& g, const SymMatrix& s) {
  check_same(g.dim(), s.dim());
  const int n = s.dim();
  Matrix gs(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const double gik = g(i, k);
      for (int j = 0; j < n; ++j) gs(i, j) += gik * s(k, j);
    }
  SymMatrix out(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double sum = 0.0;
      for (int k = 0; k < n; ++k) sum += gs(i, k) * g(j, k);
      out.set(i, j, sum);
    }
  return out;
}

Matrix operator*(const SymMatrix& a, const SymMatrix& b) {
  check_same(a.dim(), b.dim());
  const int n = a.dim();
  Matrix c(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double sum = 0.0;
      for (int k = 0; k < n; ++k) sum += a(i, k) * b(k, j);
      c(i, j) = sum;
    }
  return c;
}

double trace_product(const SymMatrix& a, const SymMatrix& b) {
  check_same(a.dim(), b.dim());
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    s += a(i, i) * b(i, i);
    for (int j = i + 1; j < a.dim(); ++j) s += 2.0 * a(i, j) * b(i, j);
  }
  return s;
}

std::array<double, kMaxDim> cholesky_solve(const Matrix& a, std::span<const double> b) {
  const int n = a.dim();
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("cholesky_solve: rhs size mismatch");
  Matrix l(n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw std::domain_error("cholesky_solve: matrix is not positive definite");
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  std::array<double, kMaxDim> y{};
  for (int i = 0; i < n; ++i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int k = 0; k < i; ++k) s -= l(i, k) * y[static_cast<std::size_t>(k)];
    y[static_cast<std::size_t>(i)] = s / l(i, i);
  }
  std::array<double, kMaxDim> x{};
  for (int i = n - 1; i >= 0; --i) {
    double s = y[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < n; ++k) s -= l(k, i) * x[static_cast<std::size_t>(k)];
    x[static_cast<std::size_t>(i)] = s / l(i, i);
  }
  return x;
}

Matrix spd_inverse(const Matrix& a) {
  const int n = a.dim();
  Matrix inv(n);
  std::array<double, kMaxDim> e{};
  for (int j = 0; j < n; ++j) {
    e.fill(0.0);
    e[static_cast<std::size_t>(j)] = 1.0;
    const auto col = cholesky_solve(a, {e.data(), static_cast<std::size_t>(n)});
    for (int i = 0; i < n; ++i) inv(i, j) = col[static_cast<std::size_t>(i)];
  }
  return inv;
}

double condition_number(const SymMatrix& s) {
  const EigDecomp e = sym_eig(s);
  if (!(e.min_value() > 0.0)) return std::numeric_limits<double>::infinity();
  return e.max_value() / e.min_value();
}

double operator_norm(const SymMatrix& s) {
  const EigDecomp e = sym_eig(s);
  return std::max(std::abs(e.max_value()), std::abs(e.min_value()));
}

std::string to_string(const SymMatrix& s) {
  std::ostringstream os;
  os.precision(6);
  os << '[';
  for (int i = 0; i < s.dim(); ++i) {
    if (i) os << "; ";
    for (int j = 0; j < s.dim(); ++j) os << (j ? " " : "") << s(i, j);
  }
  os << ']';
  return os.str();
}

}  // namespace tensmooth
