#pragma once

// Weighted means of SPD ensembles under the three metrics.

#include <span>
#include <stdexcept>
#include <vector>

#include "tensmooth/spd.hpp"

namespace tensmooth {

/// Non-owning view of tensors with matching nonnegative weights.
struct EnsembleView {
  std::span<const SpdTensor> tensors;
  std::span<const double> weights;
};

/// Owning ensemble; validated on construction (same length, finite,
/// nonnegative weights with positive sum, shared dimension).
class WeightedEnsemble {
 public:
  WeightedEnsemble() = default;
  WeightedEnsemble(std::vector<SpdTensor> tensors, std::vector<double> weights);
  /// Equal weights.
  explicit WeightedEnsemble(std::vector<SpdTensor> tensors);

  const std::vector<SpdTensor>& tensors() const { return tensors_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return tensors_.size(); }
  EnsembleView view() const { return {tensors_, weights_}; }

 private:
  std::vector<SpdTensor> tensors_;
  std::vector<double> weights_;
};

/// Raised when the fixed-point iteration exhausts its budget.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Throws std::invalid_argument for an empty or malformed ensemble.
void validate(EnsembleView e);

SymMatrix weighted_sum_normalized(std::span<const SymMatrix> values, std::span<const double> weights);

SpdTensor mean_euclidean(EnsembleView e);
SpdTensor mean_log_euclidean(EnsembleView e);

/// Log-Euclidean mean from precomputed matrix logarithms.
SpdTensor mean_log_euclidean_from_logs(std::span<const SymMatrix> logs, std::span<const double> weights);

/// n-step recursive geodesic mean. m_1 = z_1 and each step moves along the
/// affine-invariant geodesic from m_j toward z_{j+1} by the fraction
/// w_{j+1} / sum_{i<=j+1} w_i. The result depends on the order of the
/// ensemble unless all tensors commute. Zero-weight entries are skipped.
SpdTensor mean_affine_recursive(EnsembleView e);

struct FixedPointOptions {
  double tol = 1e-10;
  int max_iter = 200;
};

struct FixedPointResult {
  SpdTensor mean;
  int iterations = 0;
  /// Frobenius norm of sum_i w_i log(M^{-1/2} X_i M^{-1/2}) at the result.
  double residual = 0.0;
};

/// Affine-invariant Karcher mean by the barycentric fixed-point iteration,
/// started at the log-Euclidean mean. Requires strictly positive weights.
/// Throws ConvergenceError after max_iter iterations.
FixedPointResult mean_affine_fixed_point(EnsembleView e, FixedPointOptions opts = {});

/// Norm of the weighted barycentric residual at m.
double barycentric_residual(EnsembleView e, const SpdTensor& m);

SpdTensor weighted_mean(Metric metric, EnsembleView e);

}  // namespace tensmooth
