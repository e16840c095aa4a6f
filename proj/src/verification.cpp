#include "tensmooth/verification.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>

#include "tensmooth/parallel.hpp"
#include "tensmooth/regression.hpp"
#include "tensmooth/rician.hpp"

namespace tensmooth {

namespace {

// Stream ids separating the suites' replicate draws.
constexpr std::uint64_t kVarianceStream = 11;
constexpr std::uint64_t kBiasStream = 12;
constexpr std::uint64_t kOrderingStream = 13;
constexpr std::uint64_t kMleStream = 14;
constexpr std::uint64_t kSignalStream = 15;

CheckRow relative_check(std::string suite, std::string check, double value, double reference, double tol) {
  const bool pass = std::abs(value - reference) <= tol * std::abs(reference);
  return {std::move(suite), std::move(check), value, reference, tol, pass};
}

std::string fmt_t(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

const TensorVec kD0{0.7, 2.0, 0.7, 0.0, 0.0, 0.0};

std::string entry_name(int k) {
  static const char* names[] = {"D11", "D22", "D33", "D12", "D13", "D23"};
  return names[k];
}

// Per-replicate estimate errors, reduced serially into means and variances.
struct Moments {
  Vec6 mean{};
  Vec6 var{};
};

Moments moments(const std::vector<Vec6>& xs) {
  Moments m;
  const double n = static_cast<double>(xs.size());
  for (const auto& x : xs)
    for (std::size_t k = 0; k < 6; ++k) m.mean[k] += x[k] / n;
  for (const auto& x : xs)
    for (std::size_t k = 0; k < 6; ++k) m.var[k] += (x[k] - m.mean[k]) * (x[k] - m.mean[k]) / (n - 1.0);
  return m;
}

std::vector<double> clean_signals(const TensorVec& d0, const GradientScheme& g, double s0) {
  std::vector<double> sb(g.measurements());
  for (std::size_t m = 0; m < sb.size(); ++m) sb[m] = noiseless_signal(tensor_from_vec(d0), g.design(m), s0);
  return sb;
}

SpdTensor random_tensor(RandomStream& rng) {
  SymMatrix a(3);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) a.set(i, j, rng.normal());
  EigDecomp e = sym_eig(a);
  for (int i = 0; i < 3; ++i) e.values[static_cast<std::size_t>(i)] = 0.1 + 2.9 * rng.uniform();
  return SpdTensor::unchecked(reconstruct(e, e.eigenvalues()));
}

}  // namespace

PerturbationSuite perturbation_suite(const PerturbationSuiteOptions& opts, Execution exec) {
  const std::vector<std::pair<std::string, SpdTensor>> bases{{"identity", SpdTensor::identity(3)},
                                                             {"diag(3,2,1)", SpdTensor::diagonal({3, 2, 1})},
                                                             {"diag(0.25,16,0.25)", SpdTensor::diagonal({0.25, 16, 0.25})}};
  const FamilyStyle styles[] = {FamilyStyle::additive_symmetric, FamilyStyle::multiplicative};
  const std::size_t cells = bases.size() * 2;
  std::vector<std::vector<OrderCheckRow>> orders(cells);
  std::vector<std::vector<CheckRow>> checks(cells);
  for_each_index(cells, exec, [&](std::size_t c) {
    const auto& [name, base] = bases[c / 2];
    FamilyOptions fo;
    fo.style = styles[c % 2];
    fo.seed = opts.seed;
    fo.size = opts.family_size;
    OrderCheckOptions oc;
    oc.ts = opts.ts;
    oc.family = fo;
    orders[c] = order_check(name, base, oc);
    const std::string tag = name + "/" + std::string(to_string(fo.style));
    auto& out = checks[c];
    for (double t : opts.ts) {
      const PerturbationFamily fam = make_family(base, t, fo);
      const ExactMeans ex = exact_means(fam);
      const std::string at = tag + " t=" + fmt_t(t);
      if (fo.style == FamilyStyle::additive_symmetric) {
        const double e = (fam.mean.matrix() - base.matrix()).frobenius_norm();
        out.push_back({"perturbation", "euclidean mean equals base (abs) " + at, e, 0.0, 1e-14, e <= 1e-14});
      } else {
        const double e = (ex.log_euclidean.matrix() - fam.target.matrix()).frobenius_norm();
        out.push_back({"perturbation", "log-euclidean mean equals S* (abs) " + at, e, 0.0, 1e-12, e <= 1e-12});
        const double d = (ex.log_euclidean.matrix() - ex.affine.matrix()).frobenius_norm();
        out.push_back({"perturbation", "commuting LE equals Aff (abs) " + at, d, 0.0, 1e-11, d < 1e-11});
      }
      const MeanSpectrum spec = mean_spectrum(fam.mean);
      if (spec.isotropic) {
        const SymMatrix p1 = expansion_log_euclidean(fam, spec);
        const SymMatrix p2 = expansion_affine(fam, spec).log_prediction;
        const double d = (p1 - p2).frobenius_norm();
        out.push_back({"perturbation", "isotropic predictions agree (abs) " + at, d, 0.0, 1e-15, d <= 1e-15});
      }
    }
    if (fo.style == FamilyStyle::multiplicative) {
      FamilyOptions so = fo;
      so.balancing = Balancing::stratified;
      so.size = 64;
      const double t = opts.ts.back();
      const MultiplicativeBias mb = multiplicative_bias(make_family(base, t, so));
      for (std::size_t j = 0; j < mb.observed.size(); ++j)
        out.push_back(relative_check("perturbation",
                                     "multiplicative bias sinh(ct)/ct-1 (rel) " + tag + " j=" + std::to_string(j + 1),
                                     mb.observed[j], mb.predicted[j], 0.02));
    }
  });
  PerturbationSuite s;
  for (std::size_t c = 0; c < cells; ++c) {
    s.orders.insert(s.orders.end(), orders[c].begin(), orders[c].end());
    s.checks.insert(s.checks.end(), checks[c].begin(), checks[c].end());
  }
  return s;
}

std::vector<CheckRow> regression_suite(const RegressionSuiteOptions& opts, Execution exec) {
  const GradientScheme g = default_scheme(2);
  const Asymptotics as = asymptotic_quantities(kD0, g, opts.s0);
  const auto sb = clean_signals(kD0, g, opts.s0);
  const std::size_t nm = g.measurements();
  std::vector<CheckRow> rows;

  {
    const double sigma = 0.01;
    std::vector<Vec6> ls(opts.variance_replicates), nl(opts.variance_replicates);
    for_each_index(ls.size(), exec, [&](std::size_t r) {
      RandomStream rng(RngSpec{opts.seed}, r, kVarianceStream);
      std::vector<double> s(nm);
      for (std::size_t m = 0; m < nm; ++m) s[m] = rician_sample(sb[m], sigma, rng);
      const FitReport a = fit_linear(s, g, opts.s0);
      const FitReport b = fit_nonlinear(s, g, opts.s0);
      for (std::size_t k = 0; k < 6; ++k) {
        ls[r][k] = (a.estimate[k] - kD0[k]) / sigma;
        nl[r][k] = (b.estimate[k] - kD0[k]) / sigma;
      }
    });
    const Moments ml = moments(ls), mn = moments(nl);
    for (int k = 0; k < 6; ++k) {
      rows.push_back(relative_check("regression", "Var(D_LS)/sigma^2 " + entry_name(k) + " (rel)",
                                    ml.var[static_cast<std::size_t>(k)], as.var_ls(k, k), 0.05));
      rows.push_back(relative_check("regression", "Var(D_NL)/sigma^2 " + entry_name(k) + " (rel)",
                                    mn.var[static_cast<std::size_t>(k)], as.var_nl(k, k), 0.05));
    }
  }

  {
    const double sigma = 0.2;
    std::vector<Vec6> bias(opts.bias_replicates);
    for_each_index(bias.size(), exec, [&](std::size_t r) {
      RandomStream rng(RngSpec{opts.seed}, r, kBiasStream);
      std::vector<double> s(nm);
      Vec6 lin{};
      for (std::size_t m = 0; m < nm; ++m) {
        const double re = rng.normal();
        const double im = rng.normal();
        s[m] = std::hypot(sb[m] + sigma * re, sigma * im);
        for (std::size_t k = 0; k < 6; ++k) lin[k] += sb[m] * re * g.design(m)[k];
      }
      const FitReport b = fit_nonlinear(s, g, opts.s0);
      for (std::size_t k = 0; k < 6; ++k) {
        double first = 0.0;
        for (std::size_t j = 0; j < 6; ++j) first -= as.var_nl(static_cast<int>(k), static_cast<int>(j)) * lin[j];
        bias[r][k] = (b.estimate[k] - kD0[k] - sigma * first) / (sigma * sigma);
      }
    });
    const Moments mb = moments(bias);
    for (std::size_t k = 0; k < 6; ++k) {
      const double se = std::sqrt(mb.var[k] / static_cast<double>(bias.size()));
      if (std::abs(mb.mean[k]) <= 3.0 * se) continue;
      rows.push_back(relative_check("regression", "E(D_NL - D0)/sigma^2 " + entry_name(static_cast<int>(k)) + " (rel)",
                                    mb.mean[k], as.bias2_nl[k], 0.15));
    }
  }

  {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < opts.ordering_tensors; ++i) {
      RandomStream rng(RngSpec{opts.seed}, i, kOrderingStream);
      const TensorVec d = tensor_to_vec(random_tensor(rng));
      const Asymptotics a = asymptotic_quantities(d, g, opts.s0);
      SymMatrix diff(6);
      for (int p = 0; p < 6; ++p)
        for (int q = p; q < 6; ++q) diff.set(p, q, a.var_ls(p, q) - a.var_nl(p, q));
      const double scale = std::max(1.0, a.var_ls.max_abs());
      worst = std::min(worst, sym_eig(diff).min_value() / scale);
    }
    rows.push_back({"regression", "min eig(var_ls - var_nl) over random tensors (>= -tol)", worst, 0.0, 1e-12,
                    worst >= -1e-12});
  }
  return rows;
}

std::vector<CheckRow> mle_suite(const MleSuiteOptions& opts, Execution exec) {
  const GradientScheme g = default_scheme(2);
  const auto sb = clean_signals(kD0, g, opts.s0);
  std::vector<CheckRow> rows;

  {
    const double sigma = 1e-3;
    Matrix limit(6);
    for (std::size_t m = 0; m < sb.size(); ++m)
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
          limit(i, j) += sb[m] * sb[m] * g.design(m)[static_cast<std::size_t>(i)] * g.design(m)[static_cast<std::size_t>(j)];
    const Matrix f = fisher_matrix(kD0, g, opts.s0, sigma) * (sigma * sigma);
    const double rel = (f - limit).frobenius_norm() / limit.frobenius_norm();
    rows.push_back({"mle", "sigma^2 Fisher matrix vs large-SNR limit at sigma=1e-3 (rel Frobenius)", rel, 0.0, 0.01,
                    rel <= 0.01});
  }
  for (double w : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0}) {
    const double v = fisher_normalized(w);
    rows.push_back({"mle", "sigma^2 J in (0,1) at zeta/sigma=" + fmt_t(w), v, 0.5, 0.5, v > 0.0 && v < 1.0});
  }
  {
    const double v = fisher_normalized(50.0);
    rows.push_back({"mle", "sigma^2 J at zeta/sigma=50 (abs)", v, 1.0, 1e-3, std::abs(v - 1.0) <= 1e-3});
  }
  {
    const double sigma = 0.05;
    const Asymptotics as = asymptotic_quantities(kD0, g, opts.s0);
    std::vector<Vec6> ml(opts.replicates);
    for_each_index(ml.size(), exec, [&](std::size_t r) {
      RandomStream rng(RngSpec{opts.seed}, r, kMleStream);
      std::vector<double> s(sb.size());
      for (std::size_t m = 0; m < s.size(); ++m) s[m] = rician_sample(sb[m], sigma, rng);
      const FitReport b = fit_mle(s, g, opts.s0, sigma);
      for (std::size_t k = 0; k < 6; ++k) ml[r][k] = (b.estimate[k] - kD0[k]) / sigma;
    });
    const Moments mm = moments(ml);
    for (int k = 0; k < 6; ++k)
      rows.push_back(relative_check("mle", "Var(D_ML)/sigma^2 vs NL asymptotic " + entry_name(k) + " (rel)",
                                    mm.var[static_cast<std::size_t>(k)], as.var_nl(k, k), 0.10));
  }
  return rows;
}

std::vector<CheckRow> signal_bias_suite(const SignalBiasSuiteOptions& opts, Execution exec) {
  std::vector<CheckRow> rows;
  const double s0 = 10.0;
  for (std::size_t p = 0; p < opts.snr.size(); ++p) {
    const double clean = opts.snr[p] * opts.sigma;
    const double xbd = clean > 0.0 ? -std::log(clean / s0) : std::numeric_limits<double>::infinity();
    const double predicted = dwi_signal_bias(xbd, s0, opts.sigma);
    std::vector<double> draws(opts.draws);
    for_each_index(draws.size(), exec, [&](std::size_t r) {
      RandomStream rng(RngSpec{opts.seed}, r, kSignalStream + 16 * p);
      draws[r] = rician_sample(clean, opts.sigma, rng) - clean;
    });
    double mean = 0.0, var = 0.0;
    for (double d : draws) mean += d;
    mean /= static_cast<double>(draws.size());
    for (double d : draws) var += (d - mean) * (d - mean);
    var /= static_cast<double>(draws.size() - 1);
    const double se = std::sqrt(var / static_cast<double>(draws.size()));
    rows.push_back({"signal_bias", "E(S) - S at S/sigma=" + fmt_t(opts.snr[p]) + " (standard errors)", mean, predicted,
                    4.0 * se, std::abs(mean - predicted) <= 4.0 * se});
  }
  return rows;
}

std::vector<CheckRow> bessel_suite() {
  std::vector<CheckRow> rows;
  for (double t : {1e-3, 0.5, 5.0, 19.9, 20.1, 50.0, 300.0}) {
    const double i0 = boost::math::cyl_bessel_i(0, t) * std::exp(-t);
    const double i1 = boost::math::cyl_bessel_i(1, t) * std::exp(-t);
    rows.push_back(relative_check("bessel", "I0e at t=" + fmt_t(t) + " (rel)", bessel_i0e(t), i0, 1e-12));
    rows.push_back(relative_check("bessel", "I1e at t=" + fmt_t(t) + " (rel)", bessel_i1e(t), i1, 1e-12));
  }
  return rows;
}

}  // namespace tensmooth
