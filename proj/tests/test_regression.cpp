#include <boost/math/special_functions/expint.hpp>

#include "support.hpp"
#include "tensmooth/phantom.hpp"
#include "tensmooth/regression.hpp"

using namespace tensmooth;

namespace {

std::vector<double> clean_signals(const SymMatrix& d, const GradientScheme& g, double s0) {
  std::vector<double> s(g.measurements());
  for (std::size_t m = 0; m < s.size(); ++m) s[m] = noiseless_signal(d, g.design(m), s0);
  return s;
}

std::vector<double> noisy_signals(const std::vector<double>& clean, double sigma, RandomStream& rng) {
  std::vector<double> s(clean.size());
  for (std::size_t m = 0; m < s.size(); ++m) s[m] = rician_sample(clean[m], sigma, rng);
  return s;
}

double vec_diff(const TensorVec& a, const TensorVec& b) {
  double m = 0.0;
  for (int i = 0; i < 6; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// E log(E + a) for E exponential with mean 2, closed form.
double elog_closed(double a) {
  if (a == 0.0) return std::log(2.0) - std::numbers::egamma;
  return std::log(a) + std::exp(a / 2) * boost::math::expint(1, a / 2);
}

/// Empirical variance of each component over replicates, divided by sigma^2.
struct Spread {
  TensorVec mean{};
  TensorVec var{};
};

template <class Fit>
Spread replicate(const SymMatrix& d0, double sigma, int n, std::uint64_t seed, Fit&& fit) {
  const GradientScheme g = default_scheme(2);
  const auto clean = clean_signals(d0, g, 10.0);
  std::vector<TensorVec> est(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    RandomStream rng({seed}, static_cast<std::uint64_t>(r), 0);
    est[static_cast<std::size_t>(r)] = fit(noisy_signals(clean, sigma, rng), g);
  }
  Spread s;
  for (const auto& e : est)
    for (int i = 0; i < 6; ++i) s.mean[i] += e[i] / n;
  for (const auto& e : est)
    for (int i = 0; i < 6; ++i) s.var[i] += (e[i] - s.mean[i]) * (e[i] - s.mean[i]) / (n - 1) / (sigma * sigma);
  return s;
}

}  // namespace

TEST_CASE("noiseless signals are fitted exactly") {
  const GradientScheme g = default_scheme(2);
  for (const SymMatrix& d : {SymMatrix::diagonal({0.5, 4, 0.5}), SymMatrix::identity(3),
                             SymMatrix::diagonal({0.25, 16, 0.25})}) {
    const auto s = clean_signals(d, g, 10.0);
    const TensorVec want = tensor_to_vec(d);
    const FitReport lin = fit_linear(s, g, 10.0);
    CHECK(lin.residual < 1e-10);
    CHECK(vec_diff(lin.estimate, want) < 1e-9);
    CHECK(lin.spd);
    const FitReport nl = fit_nonlinear(s, g, 10.0);
    CHECK(nl.converged);
    CHECK(vec_diff(nl.estimate, want) < 1e-9);
    const FitReport ml = fit_mle(s, g, 10.0, 1e-4);
    CHECK(ml.converged);
    CHECK(vec_diff(ml.estimate, want) < 1e-3);
  }
}

TEST_CASE("linear fit matches an independent least-squares solve") {
  const GradientScheme g = default_scheme(2);
  RandomStream rng({40}, 0, 0);
  const auto s = noisy_signals(clean_signals(SymMatrix::diagonal({0.7, 2, 0.7}), g, 10.0), 0.3, rng);
  // Normal equations assembled here: (sum x x^T) d = -sum x log(S/s0).
  Matrix a(6);
  std::array<double, 6> b{};
  for (std::size_t m = 0; m < g.measurements(); ++m) {
    const Vec6& x = g.design(m);
    for (int i = 0; i < 6; ++i) {
      b[i] -= x[i] * std::log(s[m] / 10.0);
      for (int j = 0; j < 6; ++j) a(i, j) += x[i] * x[j];
    }
  }
  const auto want = cholesky_solve(a, b);
  const FitReport lin = fit_linear(s, g, 10.0);
  for (int i = 0; i < 6; ++i) CHECK(lin.estimate[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("nonlinear fit satisfies the normal equations") {
  const GradientScheme g = default_scheme(2);
  RandomStream rng({41}, 0, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = noisy_signals(clean_signals(SymMatrix::diagonal({0.7, 2, 0.7}), g, 10.0), 0.5, rng);
    const FitReport nl = fit_nonlinear(s, g, 10.0);
    REQUIRE(nl.converged);
    std::array<double, 6> grad{};
    for (std::size_t m = 0; m < g.measurements(); ++m) {
      const double mu = noiseless_signal(tensor_from_vec(nl.estimate), g.design(m), 10.0);
      for (int i = 0; i < 6; ++i) grad[i] += (s[m] - mu) * mu * g.design(m)[i];
    }
    for (double v : grad) CHECK(std::abs(v) < 1e-8);
    // Objective no worse than at the linear start.
    const auto sse = [&](const TensorVec& d) {
      double f = 0.0;
      for (std::size_t m = 0; m < g.measurements(); ++m)
        f += std::pow(s[m] - noiseless_signal(tensor_from_vec(d), g.design(m), 10.0), 2);
      return f;
    };
    CHECK(sse(nl.estimate) <= sse(fit_linear(s, g, 10.0).estimate) + 1e-12);
  }
}

TEST_CASE("MLE maximizes the Rician likelihood and approaches NL as sigma shrinks") {
  const GradientScheme g = default_scheme(2);
  const auto clean = clean_signals(SymMatrix::diagonal({0.7, 2, 0.7}), g, 10.0);
  const double sigma = 0.01;
  for (int r = 0; r < 100; ++r) {
    RandomStream rng({42}, static_cast<std::uint64_t>(r), 0);
    const auto s = noisy_signals(clean, sigma, rng);
    const FitReport nl = fit_nonlinear(s, g, 10.0);
    const FitReport ml = fit_mle(s, g, 10.0, sigma);
    REQUIRE(ml.converged);
    double n2 = 0.0;
    for (int i = 0; i < 6; ++i) n2 += std::pow(ml.estimate[i] - nl.estimate[i], 2);
    CHECK(std::sqrt(n2) < 10 * sigma * sigma);
  }
  RandomStream rng({43}, 0, 0);
  const auto s = noisy_signals(clean, 0.5, rng);
  const FitReport ml = fit_mle(s, g, 10.0, 0.5);
  const double best = rician_loglik(s, g, 10.0, 0.5, ml.estimate);
  for (int k = 0; k < 100; ++k) {
    TensorVec d = ml.estimate;
    for (double& v : d) v += 1e-3 * rng.normal();
    CHECK(rician_loglik(s, g, 10.0, 0.5, d) <= best + 1e-9);
  }
}

TEST_CASE("small-noise variances") {
  const SymMatrix d0 = SymMatrix::diagonal({0.7, 2, 0.7});
  const GradientScheme g = default_scheme(2);
  const Asymptotics a = asymptotic_quantities(tensor_to_vec(d0), g, 10.0);
  const int n = 20000;
  const Spread ls = replicate(d0, 0.01, n, 44, [](const auto& s, const auto& g) { return fit_linear(s, g, 10.0).estimate; });
  const Spread nl =
      replicate(d0, 0.01, n, 45, [](const auto& s, const auto& g) { return fit_nonlinear(s, g, 10.0).estimate; });
  for (int i = 0; i < 6; ++i) {
    CHECK(ls.var[i] == doctest::Approx(a.var_ls(i, i)).epsilon(0.05));
    CHECK(nl.var[i] == doctest::Approx(a.var_nl(i, i)).epsilon(0.05));
  }
}

TEST_CASE("asymptotic quantities") {
  const GradientScheme g = default_scheme(2);
  // Isotropic: every S_b is equal and the two variances coincide.
  const Asymptotics iso = asymptotic_quantities(tensor_to_vec(SymMatrix::identity(3) * 0.8), g, 10.0);
  CHECK((iso.var_ls - iso.var_nl).max_abs() < 1e-12 * iso.var_nl.max_abs());

  // Strong anisotropy inflates the LS variance.
  const Asymptotics an = asymptotic_quantities(tensor_to_vec(SymMatrix::diagonal({0.25, 16, 0.25})), g, 10.0);
  const double ls_max = sym_eig(SymMatrix(an.var_ls)).max_value();
  const double nl_max = sym_eig(SymMatrix(an.var_nl)).max_value();
  CHECK(ls_max > 10 * nl_max);

  for (const SymMatrix& d : {SymMatrix::diagonal({0.7, 2, 0.7}), SymMatrix::diagonal({0.25, 16, 0.25})}) {
    const Asymptotics q = asymptotic_quantities(tensor_to_vec(d), g, 10.0);
    REQUIRE(q.bias_coefficients.size() == g.measurements());
    for (double c : q.bias_coefficients) {
      CHECK(c > 0.0);
      CHECK(c < 1.0);
    }
    // var_nl <= var_ls in the Loewner order.
    CHECK(sym_eig(SymMatrix(q.var_ls - q.var_nl)).min_value() > -1e-12 * q.var_ls.max_abs());
  }
}

TEST_CASE("low-SNR bias of the linear fit") {
  const GradientScheme g = default_scheme(2);
  const TensorVec mild = tensor_to_vec(SymMatrix::diagonal({0.7, 2, 0.7}));
  const TensorVec zero{};
  CHECK(low_snr_ls_bias(mild, g, 10.0, 0.01) == zero);

  const SymMatrix d0 = SymMatrix::diagonal({0.25, 16, 0.25});
  const TensorVec v0 = tensor_to_vec(d0);
  // Direction (0,1,0) is uninformative at sigma = 1.
  CHECK(noiseless_signal(d0, design_vector({0, 1, 0}), 10.0) < 1.2e-6);
  const TensorVec pred = low_snr_ls_bias(v0, g, 10.0, 1.0);

  const int n = 100000;
  const Spread mc = replicate(d0, 1.0, n, 46, [](const auto& s, const auto& g) { return fit_linear(s, g, 10.0).estimate; });
  int compared = 0;
  for (int i = 0; i < 6; ++i) {
    const double bias = mc.mean[i] - v0[i];
    const double se = std::sqrt(mc.var[i] / n);
    if (std::abs(bias) > 3 * se) {
      ++compared;
      CHECK(std::signbit(bias) == std::signbit(pred[i]));
    }
  }
  CHECK(compared >= 3);

  // Raising s0 moves log(s0/sigma) by log 2 and shifts every uninformative
  // term accordingly; the E log term changes through S_b^2/sigma^2 only.
  const SymMatrix d1 = SymMatrix::diagonal({0.25, 40, 0.25});
  const TensorVec v1 = tensor_to_vec(d1);
  const TensorVec b10 = low_snr_ls_bias(v1, g, 10.0, 1.0), b20 = low_snr_ls_bias(v1, g, 20.0, 1.0);
  Matrix xx(6);
  std::array<double, 6> rhs{};
  for (std::size_t m = 0; m < g.measurements(); ++m) {
    const Vec6& x = g.design(m);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) xx(i, j) += x[i] * x[j];
    const double s10 = noiseless_signal(d1, x, 10.0), s20 = noiseless_signal(d1, x, 20.0);
    REQUIRE((s10 < 1.0) == (s20 < 1.0));
    if (s10 >= 1.0) continue;
    const double shift = std::log(2.0) - 0.5 * (elog_closed(s20 * s20) - elog_closed(s10 * s10));
    for (int i = 0; i < 6; ++i) rhs[i] += shift * x[i];
  }
  const auto want = cholesky_solve(xx, rhs);
  for (int i = 0; i < 6; ++i) CHECK(b20[i] - b10[i] == doctest::Approx(want[i]).epsilon(1e-6).scale(1.0));
}

TEST_CASE("field fits are schedule independent") {
  PhantomConfig cfg = default_phantom_config();
  cfg.grid.dims = {128, 128, 1};
  const TensorField f = build_phantom(cfg);
  const GradientScheme g = default_scheme(2);
  const DwiVolume v = rician_corrupt(noiseless_dwi(f, g, 10.0), 0.5, {47});
  for (FitMethod m : {FitMethod::linear, FitMethod::nonlinear}) {
    const FieldFit a = fit_field(v, g, m, 0.5, {}, Execution::parallel);
    const FieldFit b = fit_field(v, g, m, 0.5, {}, Execution::serial);
    bool same = true;
    for (std::size_t i = 0; i < a.estimates.values.size(); ++i)
      for (int p = 0; p < 6; ++p) same = same && a.estimates.values[i].packed()[p] == b.estimates.values[i].packed()[p];
    CHECK(same);
    CHECK(a.not_converged == b.not_converged);
    CHECK(a.not_spd == b.not_spd);
    std::size_t indefinite = 0;
    for (const auto& d : a.diagnostics) indefinite += d.spd ? 0 : 1;
    CHECK(indefinite == a.not_spd);
    CHECK(a.not_spd > 0);
  }
  for (FitMethod m : {FitMethod::linear, FitMethod::nonlinear, FitMethod::mle}) CHECK(parse_fit_method(to_string(m)) == m);
  CHECK_THROWS(parse_fit_method("bayes"));
}
