#pragma once

// Numerical checks of the perturbation expansions, the regression
// asymptotics, Rician Fisher information and signal bias. Monte Carlo loops
// draw replicate r from RandomStream(seed, r, suite-specific stream) and
// reduce serially, so results do not depend on the thread count.

#include <cstdint>
#include <string>
#include <vector>

#include "tensmooth/field.hpp"
#include "tensmooth/perturbation.hpp"

namespace tensmooth {

struct CheckRow {
  std::string suite;
  std::string check;
  double value = 0.0;
  double reference = 0.0;
  /// Allowed deviation; its meaning (relative, absolute, standard errors)
  /// is part of the check name.
  double tolerance = 0.0;
  bool pass = false;
};

struct PerturbationSuite {
  std::vector<OrderCheckRow> orders;
  std::vector<CheckRow> checks;
};

struct PerturbationSuiteOptions {
  std::vector<double> ts{0.1, 0.05, 0.025};
  std::uint64_t seed = 1;
  std::size_t family_size = 8;
};

/// Bases identity, diag(3,2,1), diag(0.25,16,0.25) under both family
/// styles: t-halving order rows plus exactness checks (family means,
/// commuting LE = Aff, isotropic agreement of the two predictions,
/// multiplicative bias).
PerturbationSuite perturbation_suite(const PerturbationSuiteOptions& opts = {}, Execution exec = Execution::parallel);

struct RegressionSuiteOptions {
  std::uint64_t seed = 1;
  std::size_t variance_replicates = 100000;
  std::size_t bias_replicates = 200000;
  std::size_t ordering_tensors = 50;
  double s0 = 10.0;
};

/// LS and NL variances at sigma 0.01 against their closed forms, NL bias at
/// sigma 0.2, and var_nl <= var_ls on random tensors. The bias estimate
/// subtracts the (exactly mean-zero) first-order term of each replicate as
/// a control variate.
std::vector<CheckRow> regression_suite(const RegressionSuiteOptions& opts = {}, Execution exec = Execution::parallel);

struct MleSuiteOptions {
  std::uint64_t seed = 1;
  std::size_t replicates = 20000;
  double s0 = 10.0;
};

/// Large-SNR limit of the Fisher matrix, sigma^2 J on a grid, and the MLE
/// Monte Carlo variance against the NL asymptotic variance.
std::vector<CheckRow> mle_suite(const MleSuiteOptions& opts = {}, Execution exec = Execution::parallel);

struct SignalBiasSuiteOptions {
  std::uint64_t seed = 1;
  std::size_t draws = 1000000;
  double sigma = 1.0;
  std::vector<double> snr{0.0, 0.5, 1.0, 2.0, 5.0};
};

/// dwi_signal_bias against Monte Carlo means, within 4 standard errors.
std::vector<CheckRow> signal_bias_suite(const SignalBiasSuiteOptions& opts = {}, Execution exec = Execution::parallel);

/// Scaled Bessel functions against Boost's unscaled ones.
std::vector<CheckRow> bessel_suite();

}  // namespace tensmooth
