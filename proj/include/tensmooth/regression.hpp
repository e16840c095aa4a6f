#pragma once

// Per-voxel diffusion tensor estimation from DWI signals and the
// small-noise asymptotics of the estimators.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tensmooth/noise.hpp"

namespace tensmooth {

/// (D11, D22, D33, D12, D13, D23).
using TensorVec = Vec6;

struct FitReport {
  TensorVec estimate{};
  bool converged = false;
  int iterations = 0;
  /// Linear: norm of the log-domain residual. Nonlinear: norm of the normal
  /// equation sum_b (S_b - mu_b) mu_b x_b. MLE: sigma^2 times the score norm.
  double residual = 0.0;
  bool spd = false;
  /// Eigenvalue-floor projection, filled when requested and spd is false.
  std::optional<SpdTensor> projected;
  /// Signals raised to the floor 1e-12 * s0 before taking logs.
  int clamped = 0;
};

struct FitOptions {
  double tol = 1e-10;
  int max_iter = 100;
  bool project = false;
};

enum class FitMethod { linear, nonlinear, mle };

std::string_view to_string(FitMethod m);
FitMethod parse_fit_method(std::string_view name);

/// Log-domain least squares via the normal equations.
FitReport fit_linear(std::span<const double> signals, const GradientScheme& g, double s0, FitOptions opts = {});

/// Gauss-Newton with halving line search on sum_b (S_b - s0 exp(-x_b^T D))^2.
/// Starts from the linear fit unless init is given. Non-convergence is
/// reported through `converged`, with the best iterate as the estimate.
FitReport fit_nonlinear(std::span<const double> signals, const GradientScheme& g, double s0,
                        std::optional<TensorVec> init = std::nullopt, FitOptions opts = {});

/// Damped Newton ascent of the Rician log-likelihood with sigma known.
/// Starts from the nonlinear fit unless init is given; falls back to the
/// Fisher-scoring direction when the Hessian is not negative definite.
FitReport fit_mle(std::span<const double> signals, const GradientScheme& g, double s0, double sigma,
                  std::optional<TensorVec> init = std::nullopt, FitOptions opts = {});

double rician_loglik(std::span<const double> signals, const GradientScheme& g, double s0, double sigma,
                     const TensorVec& d);

struct Asymptotics {
  /// Leading variance of D_LS / sigma.
  Matrix var_ls;
  /// Leading variance of D_NL / sigma.
  Matrix var_nl;
  /// Mean of the sigma^2 term of D_NL.
  TensorVec bias2_nl{};
  /// 1 - S_b^2 x_b^T (sum S^2 x x^T)^{-1} x_b per measurement.
  std::vector<double> bias_coefficients;
};

Asymptotics asymptotic_quantities(const TensorVec& d0, const GradientScheme& g, double s0);

/// Bias of the linear fit when some measurements drown in noise: a
/// measurement is uninformative when s0 exp(-x_b^T D0) < informative_cut *
/// sigma. Returns (sum x x^T)^{-1} [-(sum_c x x^T) D0 + sum_c (log(s0/sigma)
/// - E log(|eps|^2 + S_b^2/sigma^2) / 2) x_b] summed over the uninformative
/// set c; zero when every measurement is informative.
TensorVec low_snr_ls_bias(const TensorVec& d0, const GradientScheme& g, double s0, double sigma,
                          double informative_cut = 1.0);

struct VoxelDiagnostics {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  bool spd = false;
  int clamped = 0;
};

struct FieldFit {
  FitMethod method = FitMethod::linear;
  SymField estimates;
  std::vector<VoxelDiagnostics> diagnostics;
  std::size_t not_converged = 0;
  std::size_t not_spd = 0;
};

/// Fits every voxel independently. sigma is only used by the MLE.
FieldFit fit_field(const DwiVolume& v, const GradientScheme& g, FitMethod method, double sigma = 0.0,
                   FitOptions opts = {}, Execution exec = Execution::parallel);

}  // namespace tensmooth
