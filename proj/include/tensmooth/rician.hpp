#pragma once

// Rician distribution: scaled modified Bessel functions, density, Fisher
// information in the amplitude, and the mean of a Rician magnitude.

#include "tensmooth/linalg.hpp"
#include "tensmooth/noise.hpp"

namespace tensmooth {

/// e^{-|t|} I0(t) and e^{-|t|} I1(t). Power series for |t| <= 20, Hankel
/// asymptotic expansion beyond. I1 is odd, I0 even.
double bessel_i0e(double t);
double bessel_i1e(double t);

/// Unscaled I0, I1; overflow to infinity for |t| above ~713.
double bessel_i0(double t);
double bessel_i1(double t);

/// F(t) = I1(t) / I0(t), t >= 0.
double bessel_ratio(double t);
/// F'(t) = 1 - F(t)/t - F(t)^2, with F'(0) = 1/2.
double bessel_ratio_derivative(double t);

struct RicianParams {
  double zeta = 0.0;
  double sigma = 1.0;
};

double rician_pdf(RicianParams p, double x);
/// -infinity for x <= 0.
double rician_logpdf(RicianParams p, double x);
/// P(X <= x) by adaptive quadrature of the density.
double rician_cdf(RicianParams p, double x);

/// d/dzeta log p(x) = -zeta/sigma^2 + (x/sigma^2) F(x zeta / sigma^2).
double rician_score(RicianParams p, double x);

/// E X = sigma sqrt(pi/2) L_{1/2}(-zeta^2 / 2 sigma^2).
double rician_mean(RicianParams p);

/// Normalized Fisher information sigma^2 J(zeta; sigma) as a function of
/// w = zeta / sigma. Lies in (0, 1) for w > 0 and tends to 1 as w grows.
double fisher_normalized(double w);

/// J(zeta; sigma).
double fisher_scalar(RicianParams p);

/// sum_b J(S_b; sigma) S_b^2 x_b x_b^T with S_b = s0 exp(-x_b^T D0).
Matrix fisher_matrix(const Vec6& d0, const GradientScheme& g, double s0, double sigma);

/// E(S_b) - S_b for a Rician measurement with noiseless value
/// s0 exp(-xbD) and noise scale sigma.
double dwi_signal_bias(double xbD, double s0, double sigma);

/// E log(E + a) where E is exponential with mean 2 (the squared norm of a
/// standard bivariate normal), by quadrature. a >= 0.
double expected_log_shifted_exp2(double a);

}  // namespace tensmooth
