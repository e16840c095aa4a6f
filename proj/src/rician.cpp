#include "tensmooth/rician.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace tensmooth {

namespace {

constexpr double kSeriesLimit = 20.0;

// I_nu(t) by its power series, t >= 0, nu in {0, 1}.
double series(int nu, double t) {
  const double q = 0.25 * t * t;
  double term = nu == 0 ? 1.0 : 0.5 * t;
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k + nu));
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

// sqrt(2 pi t) e^{-t} I_nu(t) by the Hankel expansion, t > 20.
double hankel(int nu, double t) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (odd * odd - mu) / (8.0 * k * t);
    if (std::abs(term) >= prev) break;
    sum += term;
    prev = std::abs(term);
    if (prev < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

double scaled(int nu, double t) {
  const double a = std::abs(t);
  double v;
  if (a <= kSeriesLimit)
    v = series(nu, a) * std::exp(-a);
  else
    v = hankel(nu, a) / std::sqrt(2.0 * std::numbers::pi * a);
  return (nu == 1 && t < 0) ? -v : v;
}

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("Rician sigma must be positive and finite");
}

}  // namespace

double bessel_i0e(double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("Bessel argument must be finite");
  return scaled(0, t);
}

double bessel_i1e(double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("Bessel argument must be finite");
  return scaled(1, t);
}

double bessel_i0(double t) { return bessel_i0e(t) * std::exp(std::abs(t)); }
double bessel_i1(double t) { return bessel_i1e(t) * std::exp(std::abs(t)); }

double bessel_ratio(double t) {
  if (t < 0.0) throw std::invalid_argument("bessel_ratio needs t >= 0");
  if (t == 0.0) return 0.0;
  return bessel_i1e(t) / bessel_i0e(t);
}

double bessel_ratio_derivative(double t) {
  if (t < 0.0) throw std::invalid_argument("bessel_ratio_derivative needs t >= 0");
  // Series F(t) = t/2 - t^3/16 + ..., so 1 - F/t - F^2 has removable
  // cancellation near zero.
  if (t < 1e-4) return 0.5 - 3.0 * t * t / 16.0;
  const double f = bessel_ratio(t);
  return 1.0 - f / t - f * f;
}

double rician_logpdf(RicianParams p, double x) {
  check_sigma(p.sigma);
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  const double s2 = p.sigma * p.sigma;
  const double d = x - p.zeta;
  return std::log(x / s2) - d * d / (2.0 * s2) + std::log(bessel_i0e(x * p.zeta / s2));
}

double rician_pdf(RicianParams p, double x) {
  if (!(x > 0.0)) return 0.0;
  return std::exp(rician_logpdf(p, x));
}

double rician_cdf(RicianParams p, double x) {
  check_sigma(p.sigma);
  const double lo = std::max(0.0, p.zeta - 40.0 * p.sigma);
  if (x <= lo) return 0.0;
  const double hi = std::min(x, p.zeta + 40.0 * p.sigma);
  auto f = [&](double u) { return rician_pdf(p, u); };
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-14);
  return std::min(1.0, v);
}

double rician_score(RicianParams p, double x) {
  check_sigma(p.sigma);
  const double s2 = p.sigma * p.sigma;
  return -p.zeta / s2 + (x / s2) * bessel_ratio(x * p.zeta / s2);
}

double rician_mean(RicianParams p) {
  check_sigma(p.sigma);
  const double x = -p.zeta * p.zeta / (2.0 * p.sigma * p.sigma);
  const double y = -0.5 * x;
  // e^{x/2}[(1-x) I0(-x/2) - x I1(-x/2)] with e^{x/2} = e^{-y} folded into
  // the scaled Bessel functions.
  const double laguerre = (1.0 - x) * bessel_i0e(y) - x * bessel_i1e(y);
  return p.sigma * std::sqrt(std::numbers::pi / 2.0) * laguerre;
}

double fisher_normalized(double w) {
  if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("fisher_normalized needs finite w >= 0");
  if (w == 0.0) return 0.0;
  // u^3 (I1^2/I0)(uw) e^{-(u^2 + w^2)/2} with the Bessel growth e^{uw}
  // absorbed into the Gaussian factor.
  auto f = [w](double u) {
    const double t = u * w;
    const double i1 = bessel_i1e(t);
    const double d = u - w;
    return u * u * u * (i1 * i1 / bessel_i0e(t)) * std::exp(-0.5 * d * d);
  };
  const double a = std::max(0.0, w - 12.0);
  const double b = w + 15.0;
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-14, &err);
  if (!(err < 1e-9 * std::max(1.0, v)))
    throw std::runtime_error("Fisher information quadrature did not converge (error " + std::to_string(err) + ")");
  return v - w * w;
}

double fisher_scalar(RicianParams p) {
  check_sigma(p.sigma);
  return fisher_normalized(p.zeta / p.sigma) / (p.sigma * p.sigma);
}

Matrix fisher_matrix(const Vec6& d0, const GradientScheme& g, double s0, double sigma) {
  check_sigma(sigma);
  const SymMatrix d = tensor_from_vec(d0);
  Matrix out(6);
  for (std::size_t m = 0; m < g.measurements(); ++m) {
    const Vec6& x = g.design(m);
    const double s = noiseless_signal(d, x, s0);
    const double c = fisher_scalar({s, sigma}) * s * s;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) out(i, j) += c * x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(j)];
  }
  return out;
}

double dwi_signal_bias(double xbD, double s0, double sigma) {
  const double clean = s0 * std::exp(-xbD);
  return rician_mean({clean, sigma}) - clean;
}

double expected_log_shifted_exp2(double a) {
  if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("expected_log_shifted_exp2 needs finite a >= 0");
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [a](double u) { return std::log(u + a) * 0.5 * std::exp(-0.5 * u); };
  return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

}  // namespace tensmooth
