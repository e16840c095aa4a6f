#include "tensmooth/karcher.hpp"

#include <cmath>
#include <string>

namespace tensmooth {

namespace {

double weight_total(std::span<const double> w) {
  double s = 0.0;
  for (double x : w) s += x;
  return s;
}

struct Tangent {
  /// Normalized-weight sum of log(M^{-1/2} X_i M^{-1/2}).
  SymMatrix residual;
  /// Weighted squared distance to the ensemble.
  double cost = 0.0;
  double step = 1.0;
};

Tangent tangent_at(EnsembleView e, const SpdTensor& m, double total) {
  const Matrix inv_root = mat_inv_sqrt(m).matrix().dense();
  Tangent t;
  t.residual = SymMatrix(m.dim());
  double denom = 0.0;
  for (std::size_t i = 0; i < e.tensors.size(); ++i) {
    if (e.weights[i] == 0.0) continue;
    const double w = e.weights[i] / total;
    const EigDecomp ed = sym_eig(congruence(inv_root, e.tensors[i]));
    const SymMatrix l = spectral_map(ed, [](double x) { return std::log(x); });
    t.residual.add_scaled(l, w);
    const double f = l.frobenius_norm();
    t.cost += w * f * f;
    const double c = ed.max_value() / ed.min_value();
    const double lc = std::log(c);
    denom += w * (lc < 1e-8 ? 2.0 : (c + 1.0) / (c - 1.0) * lc);
  }
  t.step = 2.0 / denom;
  return t;
}

SymMatrix residual_at(EnsembleView e, const SpdTensor& m, double total) { return tangent_at(e, m, total).residual; }

}  // namespace

WeightedEnsemble::WeightedEnsemble(std::vector<SpdTensor> tensors, std::vector<double> weights)
    : tensors_(std::move(tensors)), weights_(std::move(weights)) {
  validate(view());
}

WeightedEnsemble::WeightedEnsemble(std::vector<SpdTensor> tensors)
    : tensors_(std::move(tensors)), weights_(tensors_.size(), 1.0) {
  validate(view());
}

void validate(EnsembleView e) {
  if (e.tensors.empty()) throw std::invalid_argument("ensemble is empty");
  if (e.tensors.size() != e.weights.size())
    throw std::invalid_argument("ensemble has " + std::to_string(e.tensors.size()) + " tensors but " +
                                std::to_string(e.weights.size()) + " weights");
  double total = 0.0;
  for (double w : e.weights) {
    if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("ensemble weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("ensemble weights must have a positive sum");
  const int n = e.tensors.front().dim();
  for (const auto& t : e.tensors)
    if (t.dim() != n) throw std::invalid_argument("ensemble tensors have mixed dimensions");
}

SymMatrix weighted_sum_normalized(std::span<const SymMatrix> values, std::span<const double> weights) {
  const double total = weight_total(weights);
  SymMatrix acc(values.front().dim());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (weights[i] != 0.0) acc.add_scaled(values[i], weights[i] / total);
  return acc;
}

SpdTensor mean_euclidean(EnsembleView e) {
  validate(e);
  const double total = weight_total(e.weights);
  SymMatrix acc(e.tensors.front().dim());
  for (std::size_t i = 0; i < e.tensors.size(); ++i)
    if (e.weights[i] != 0.0) acc.add_scaled(e.tensors[i], e.weights[i] / total);
  return SpdTensor::unchecked(acc);
}

SpdTensor mean_log_euclidean(EnsembleView e) {
  validate(e);
  const double total = weight_total(e.weights);
  SymMatrix acc(e.tensors.front().dim());
  for (std::size_t i = 0; i < e.tensors.size(); ++i)
    if (e.weights[i] != 0.0) acc.add_scaled(mat_log(e.tensors[i]), e.weights[i] / total);
  return mat_exp(acc);
}

SpdTensor mean_log_euclidean_from_logs(std::span<const SymMatrix> logs, std::span<const double> weights) {
  if (logs.empty() || logs.size() != weights.size()) throw std::invalid_argument("log ensemble is empty or mismatched");
  return mat_exp(weighted_sum_normalized(logs, weights));
}

SpdTensor mean_affine_recursive(EnsembleView e) {
  validate(e);
  std::size_t first = 0;
  while (e.weights[first] == 0.0) ++first;
  SpdTensor m = e.tensors[first];
  double cumulative = e.weights[first];
  for (std::size_t j = first + 1; j < e.tensors.size(); ++j) {
    const double w = e.weights[j];
    if (w == 0.0) continue;
    cumulative += w;
    m = affine_geodesic(m, e.tensors[j], w / cumulative);
  }
  return m;
}

double barycentric_residual(EnsembleView e, const SpdTensor& m) {
  validate(e);
  return residual_at(e, m, weight_total(e.weights)).frobenius_norm();
}

FixedPointResult mean_affine_fixed_point(EnsembleView e, FixedPointOptions opts) {
  validate(e);
  for (double w : e.weights)
    if (!(w > 0.0)) throw std::invalid_argument("mean_affine_fixed_point requires strictly positive weights");
  const double total = weight_total(e.weights);

  FixedPointResult r;
  r.mean = mean_log_euclidean(e);
  Tangent cur = tangent_at(e, r.mean, total);
  r.residual = cur.residual.frobenius_norm();
  for (int it = 0;; ++it) {
    r.iterations = it;
    if (r.residual < opts.tol) return r;
    if (it >= opts.max_iter)
      throw ConvergenceError("affine fixed point did not converge, residual " + std::to_string(r.residual), r.residual,
                             it);
    const Matrix root = mat_sqrt(r.mean).matrix().dense();
    // Bini-Iannazzo step length; halved while neither the cost nor the
    // residual decreases.
    double alpha = cur.step;
    for (int halving = 0;; ++halving, alpha *= 0.5) {
      const SpdTensor cand = SpdTensor::unchecked(congruence(root, mat_exp(cur.residual * alpha)));
      Tangent next = tangent_at(e, cand, total);
      const double next_residual = next.residual.frobenius_norm();
      if (next.cost <= cur.cost || next_residual < r.residual || halving == 30) {
        r.mean = cand;
        cur = std::move(next);
        r.residual = next_residual;
        break;
      }
    }
  }
}

SpdTensor weighted_mean(Metric metric, EnsembleView e) {
  switch (metric) {
    case Metric::euclidean: return mean_euclidean(e);
    case Metric::log_euclidean: return mean_log_euclidean(e);
    case Metric::affine: return mean_affine_recursive(e);
  }
  throw std::invalid_argument("unknown metric");
}

}  // namespace tensmooth
