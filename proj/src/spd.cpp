#include "tensmooth/spd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tensmooth {

namespace {

struct SqrtPair {
  SpdTensor root;
  SpdTensor inv_root;
};

SqrtPair sqrt_pair(const SpdTensor& x) {
  const EigDecomp e = sym_eig(x);
  return {SpdTensor::unchecked(spectral_map(e, [](double l) { return std::sqrt(l); })),
          SpdTensor::unchecked(spectral_map(e, [](double l) { return 1.0 / std::sqrt(l); }))};
}

void require_same_dim(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
}

}  // namespace

SpdTensor::SpdTensor(const SymMatrix& m, double floor) : m_(m) {
  if (!m.is_finite()) throw std::invalid_argument("SpdTensor: non-finite entry");
  const EigDecomp e = sym_eig(m);
  if (!(e.min_value() > floor))
    throw std::domain_error("SpdTensor: smallest eigenvalue " + std::to_string(e.min_value()) + " is not above floor " +
                            std::to_string(floor));
}

SpdTensor SpdTensor::unchecked(const SymMatrix& m) {
  SpdTensor t;
  t.m_ = m;
  return t;
}

double SpdTensor::determinant() const {
  const EigDecomp e = sym_eig(m_);
  double d = 1.0;
  for (double l : e.eigenvalues()) d *= l;
  return d;
}

bool is_spd(const SymMatrix& m, double floor) {
  if (!m.is_finite()) return false;
  return sym_eig(m).min_value() > floor;
}

SymMatrix mat_log(const SymMatrix& s) {
  const EigDecomp e = sym_eig(s);
  if (!(e.min_value() > 0.0)) throw std::domain_error("mat_log: matrix is not positive definite");
  return spectral_map(e, [](double l) { return std::log(l); });
}

SpdTensor mat_exp(const SymMatrix& m) {
  return SpdTensor::unchecked(spectral_map(sym_eig(m), [](double l) { return std::exp(l); }));
}

SpdTensor mat_pow(const SpdTensor& s, double p) {
  return SpdTensor::unchecked(spectral_map(sym_eig(s), [p](double l) { return std::pow(l, p); }));
}

SpdTensor mat_sqrt(const SpdTensor& s) { return mat_pow(s, 0.5); }
SpdTensor mat_inv_sqrt(const SpdTensor& s) { return mat_pow(s, -0.5); }
SpdTensor mat_inverse(const SpdTensor& s) {
  return SpdTensor::unchecked(spectral_map(sym_eig(s), [](double l) { return 1.0 / l; }));
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::euclidean: return "euclidean";
    case Metric::log_euclidean: return "log_euclidean";
    case Metric::affine: return "affine";
  }
  return "?";
}

Metric parse_metric(std::string_view name) {
  if (name == "euclidean") return Metric::euclidean;
  if (name == "log_euclidean") return Metric::log_euclidean;
  if (name == "affine") return Metric::affine;
  throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

double distance(Metric metric, const SpdTensor& x, const SpdTensor& y) {
  require_same_dim(x, y);
  switch (metric) {
    case Metric::euclidean: return (x.matrix() - y.matrix()).frobenius_norm();
    case Metric::log_euclidean: return (mat_log(x) - mat_log(y)).frobenius_norm();
    case Metric::affine: {
      const SpdTensor r = mat_inv_sqrt(x);
      const EigDecomp e = sym_eig(congruence(r.matrix().dense(), y));
      double s = 0.0;
      for (double l : e.eigenvalues()) {
        const double lg = std::log(l);
        s += lg * lg;
      }
      return std::sqrt(s);
    }
  }
  return 0.0;
}

SymMatrix affine_log_map(const SpdTensor& x, const SpdTensor& y) {
  require_same_dim(x, y);
  const auto [root, inv_root] = sqrt_pair(x);
  const SymMatrix inner = mat_log(congruence(inv_root.matrix().dense(), y));
  return congruence(root.matrix().dense(), inner);
}

SpdTensor affine_exp_map(const SpdTensor& x, const SymMatrix& s) {
  require_same_dim(x, s);
  const auto [root, inv_root] = sqrt_pair(x);
  const SpdTensor inner = mat_exp(congruence(inv_root.matrix().dense(), s));
  return SpdTensor::unchecked(congruence(root.matrix().dense(), inner));
}

SpdTensor affine_geodesic(const SpdTensor& x, const SpdTensor& y, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("affine_geodesic: t must lie in [0, 1]");
  require_same_dim(x, y);
  if (t == 0.0) return x;
  if (t == 1.0) return y;
  const auto [root, inv_root] = sqrt_pair(x);
  const EigDecomp inner = sym_eig(congruence(inv_root.matrix().dense(), y));
  const SymMatrix powered = spectral_map(inner, [t](double l) { return std::pow(l, t); });
  return SpdTensor::unchecked(congruence(root.matrix().dense(), powered));
}

SpdTensor project_spd(const SymMatrix& m, double floor_scale) {
  const EigDecomp e = sym_eig(m);
  const double floor = std::max(floor_scale * m.trace() / m.dim(), 1e-9);
  return SpdTensor::unchecked(spectral_map(e, [floor](double l) { return std::max(l, floor); }));
}

}  // namespace tensmooth
