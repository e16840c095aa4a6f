#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/expint.hpp>

#include "support.hpp"
#include "tensmooth/regression.hpp"
#include "tensmooth/rician.hpp"

using namespace tensmooth;

namespace {

/// I_n(t) by its power series in long double.
long double series_bessel(int n, long double t) {
  long double term = std::pow(t / 2, n);
  for (int k = 1; k <= n; ++k) term /= k;
  long double sum = term;
  for (int k = 1; k < 400; ++k) {
    term *= (t / 2) * (t / 2) / (static_cast<long double>(k) * (k + n));
    sum += term;
    if (term < sum * 1e-21L) break;
  }
  return sum;
}

template <class F>
double integrate(F&& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

/// sigma^2 E[score^2] by quadrature of the density.
double fisher_by_quadrature(double w) {
  const RicianParams p{w, 1.0};
  const double hi = w + 40.0;
  return integrate([&](double x) { return std::pow(rician_score(p, x), 2) * rician_pdf(p, x); }, 0.0, hi);
}

}  // namespace

TEST_CASE("scaled Bessel functions") {
  CHECK(bessel_i0(0.0) == 1.0);
  CHECK(bessel_i1(0.0) == 0.0);
  CHECK(bessel_i0(1.0) == doctest::Approx(1.26606587775).epsilon(1e-11));
  CHECK(bessel_i1(1.0) == doctest::Approx(0.56515910399).epsilon(1e-11));
  for (double t : {1e-6, 0.1, 1.0, 3.0, 10.0, 19.99, 20.01, 30.0}) {
    CHECK(bessel_i0(t) == doctest::Approx(static_cast<double>(series_bessel(0, t))).epsilon(1e-13));
    CHECK(bessel_i1(t) == doctest::Approx(static_cast<double>(series_bessel(1, t))).epsilon(1e-13));
  }
  for (double t : {0.5, 5.0, 25.0, 100.0, 500.0, 700.0}) {
    CHECK(bessel_i0e(t) == doctest::Approx(boost::math::cyl_bessel_i(0, t) * std::exp(-t)).epsilon(1e-12));
    CHECK(bessel_i1e(t) == doctest::Approx(boost::math::cyl_bessel_i(1, t) * std::exp(-t)).epsilon(1e-12));
  }
  CHECK(bessel_i0e(1e5) == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi * 1e5)).epsilon(1e-5));
  CHECK(bessel_i1e(-2.0) == -bessel_i1e(2.0));
  CHECK(bessel_i0e(-2.0) == bessel_i0e(2.0));
  // I2(5) = I0(5) - (2/5) I1(5).
  CHECK(boost::math::cyl_bessel_i(2, 5.0) == doctest::Approx(bessel_i0(5.0) - 0.4 * bessel_i1(5.0)).epsilon(1e-13));
}

TEST_CASE("Bessel ratio") {
  CHECK(bessel_ratio(0.0) == 0.0);
  CHECK(bessel_ratio_derivative(0.0) == doctest::Approx(0.5));
  for (double t : {0.5, 2.0, 10.0}) {
    const double h = 1e-5;
    const double fd = (bessel_ratio(t + h) - bessel_ratio(t - h)) / (2 * h);
    const double f = bessel_ratio(t);
    CHECK(std::abs(fd - (1 - f / t - f * f)) < 1e-8);
    CHECK(bessel_ratio_derivative(t) == doctest::Approx(fd).epsilon(1e-7));
  }
  CHECK(1e3 * (1 - bessel_ratio(1e3)) == doctest::Approx(0.5).epsilon(1e-3));
  for (double t = 0.01; t < 1e4; t *= 1.7) {
    CHECK(bessel_ratio(t) > 0.0);
    CHECK(bessel_ratio(t) < 1.0);
  }
}

TEST_CASE("Rician density") {
  for (double x : {0.1, 0.7, 2.0, 4.0}) {
    const double s = 1.3;
    CHECK(rician_pdf({0.0, s}, x) == doctest::Approx(x / (s * s) * std::exp(-x * x / (2 * s * s))).epsilon(1e-13));
  }
  CHECK(integrate([](double x) { return rician_pdf({7.788, 0.5}, x); }, 0.0, 20.0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(integrate([](double x) { return rician_pdf({0.3, 1.0}, x); }, 0.0, 40.0) == doctest::Approx(1.0).epsilon(1e-8));

  double best = 0.0, arg = 0.0;
  for (double x = 15.0; x < 25.0; x += 1e-4) {
    const double p = rician_pdf({20.0, 0.5}, x);
    if (p > best) best = p, arg = x;
  }
  CHECK(arg > 19.9);
  CHECK(arg < 20.1);

  const RicianParams p{2.0, 0.8};
  for (double x : {0.2, 1.5, 2.5, 5.0}) {
    CHECK(rician_logpdf(p, x) == doctest::Approx(std::log(rician_pdf(p, x))).epsilon(1e-12));
    CHECK(rician_cdf(p, x) == doctest::Approx(integrate([&](double u) { return rician_pdf(p, u); }, 0.0, x)).epsilon(1e-9));
    const double h = 1e-6;
    const double fd = (rician_logpdf({p.zeta + h, p.sigma}, x) - rician_logpdf({p.zeta - h, p.sigma}, x)) / (2 * h);
    CHECK(rician_score(p, x) == doctest::Approx(fd).epsilon(1e-6));
  }
  CHECK(rician_logpdf(p, 0.0) == -std::numeric_limits<double>::infinity());
  // Large arguments stay finite in log space.
  CHECK(std::isfinite(rician_logpdf({1e3, 1.0}, 1e3 + 1.0)));
}

TEST_CASE("Rician mean") {
  for (const RicianParams p : {RicianParams{0.0, 1.0}, RicianParams{1.0, 1.0}, RicianParams{7.788, 0.5}, RicianParams{3.0, 2.0}}) {
    const double q = integrate([&](double x) { return x * rician_pdf(p, x); }, 0.0, p.zeta + 40 * p.sigma);
    CHECK(rician_mean(p) == doctest::Approx(q).epsilon(1e-9));
  }
  CHECK(rician_mean({0.0, 1.0}) == doctest::Approx(std::sqrt(std::numbers::pi / 2)));
}

TEST_CASE("normalized Fisher information") {
  CHECK(fisher_normalized(10.0) > 0.95);
  CHECK(fisher_normalized(10.0) < 1.0);
  CHECK(fisher_normalized(0.1) > 0.0);
  CHECK(fisher_normalized(0.1) < 0.2);
  double prev = 0.0;
  for (double w : {0.5, 1.0, 2.0, 5.0, 10.0, 20.0}) {
    const double v = fisher_normalized(w);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(std::abs(fisher_normalized(50.0) - 1.0) < 1e-3);
  for (double w : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) CHECK(fisher_normalized(w) == doctest::Approx(fisher_by_quadrature(w)).epsilon(1e-7));
  CHECK(fisher_scalar({2.0, 0.5}) == doctest::Approx(fisher_normalized(4.0) / 0.25));
}

TEST_CASE("Fisher matrix limit") {
  const GradientScheme g = default_scheme(2);
  const SymMatrix d0 = SymMatrix::diagonal({0.7, 2, 0.7});
  const Vec6 v0 = tensor_to_vec(d0);
  const double sigma = 1e-3;
  const Matrix fm = fisher_matrix(v0, g, 10.0, sigma) * (sigma * sigma);
  Matrix lim(6);
  for (std::size_t m = 0; m < g.measurements(); ++m) {
    const double s = noiseless_signal(d0, g.design(m), 10.0);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) lim(i, j) += s * s * g.design(m)[i] * g.design(m)[j];
  }
  CHECK((fm - lim).frobenius_norm() < 0.01 * lim.frobenius_norm());
  const Asymptotics a = asymptotic_quantities(v0, g, 10.0);
  CHECK((spd_inverse(fm) - a.var_nl).frobenius_norm() < 0.01 * a.var_nl.frobenius_norm());
}

TEST_CASE("Rician signal bias") {
  CHECK(dwi_signal_bias(std::numeric_limits<double>::infinity(), 10.0, 1.0) ==
        doctest::Approx(std::sqrt(std::numbers::pi / 2)));
  const int n = 1000000;
  const auto mc = [&](double clean, double sigma, std::uint64_t stream) {
    std::vector<double> v(n);
    RandomStream rng({50}, stream, 0);
    for (auto& x : v) x = rician_sample(clean, sigma, rng) - clean;
    return test::moments(v);
  };
  {
    // S = 20 sigma.
    const double xbd = std::log(10.0 / 20.0);
    const double b = dwi_signal_bias(xbd, 10.0, 1.0);
    // Leading order sigma^2 / (2 S).
    CHECK(b == doctest::Approx(1.0 / 40.0).epsilon(0.02));
    const auto m = mc(20.0, 1.0, 1);
    CHECK(std::abs(m.mean - b) < 4 * m.se);
  }
  {
    const double xbd = std::log(10.0);
    const double b = dwi_signal_bias(xbd, 10.0, 1.0);
    const auto m = mc(1.0, 1.0, 2);
    CHECK(std::abs(m.mean - b) < 3 * m.se);
  }
}

TEST_CASE("E log(E + a)") {
  for (double a : {0.0, 1e-8, 0.01, 0.5, 2.0, 10.0, 100.0}) {
    const double want = a == 0.0 ? std::log(2.0) - std::numbers::egamma
                                 : std::log(a) + std::exp(a / 2) * boost::math::expint(1, a / 2);
    CHECK(expected_log_shifted_exp2(a) == doctest::Approx(want).epsilon(1e-10));
  }
}
