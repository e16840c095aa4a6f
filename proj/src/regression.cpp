#include "tensmooth/regression.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "tensmooth/parallel.hpp"
#include "tensmooth/rician.hpp"

namespace tensmooth {

namespace {

using Vec = std::array<double, kMaxDim>;

double dot(const Vec6& x, const TensorVec& d) {
  double s = 0.0;
  for (std::size_t i = 0; i < 6; ++i) s += x[i] * d[i];
  return s;
}

void add_outer(Matrix& m, const Vec6& x, double w) {
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) m(i, j) += w * x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(j)];
}

void add_scaled(Vec& v, const Vec6& x, double w) {
  for (std::size_t i = 0; i < 6; ++i) v[i] += w * x[i];
}

double norm6(const Vec& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < 6; ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

Vec6 mat_vec(const Matrix& m, const Vec& v) {
  Vec6 out{};
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) out[static_cast<std::size_t>(i)] += m(i, j) * v[static_cast<std::size_t>(j)];
  return out;
}

// Cholesky solve with a small ridge retried when the system is numerically
// indefinite.
std::optional<Vec> solve_damped(Matrix a, const Vec& b) {
  const double scale = std::max(a.trace() / 6.0, 1e-300);
  double ridge = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Matrix m = a;
    for (int i = 0; i < 6; ++i) m(i, i) += ridge;
    try {
      return cholesky_solve(m, {b.data(), 6});
    } catch (const std::domain_error&) {
      ridge = ridge == 0.0 ? 1e-14 * scale : ridge * 100.0;
    }
  }
  return std::nullopt;
}

void check_inputs(std::span<const double> signals, const GradientScheme& g, double s0) {
  if (signals.size() != g.measurements())
    throw std::invalid_argument("signal count " + std::to_string(signals.size()) + " does not match scheme (" +
                                std::to_string(g.measurements()) + ")");
  if (!(s0 > 0.0)) throw std::invalid_argument("baseline signal s0 must be positive");
}

void finish(FitReport& r, const FitOptions& opts) {
  const SymMatrix d = tensor_from_vec(r.estimate);
  r.spd = d.is_finite() && is_spd(d);
  if (!r.spd && opts.project && d.is_finite()) r.projected = project_spd(d);
}

double ls_objective(std::span<const double> s, const GradientScheme& g, double s0, const TensorVec& d) {
  double f = 0.0;
  for (std::size_t m = 0; m < s.size(); ++m) {
    const double r = s[m] - s0 * std::exp(-dot(g.design(m), d));
    f += r * r;
  }
  return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
}

// Objective changes near the optimum fall below rounding; a step whose
// objective is worse only at that level still counts as a descent step. The
// rounding level is dominated by the cancellation in s - mu.
constexpr double kRoundingSlack = 8.0 * std::numeric_limits<double>::epsilon();

double rounding_level(std::span<const double> s, const GradientScheme& g, double s0, const TensorVec& d, double scale) {
  double level = 0.0;
  for (std::size_t m = 0; m < s.size(); ++m) {
    const double mu = s0 * std::exp(-dot(g.design(m), d));
    level += std::abs(s[m] - mu) * std::max(std::abs(s[m]), mu);
  }
  return kRoundingSlack * level * scale;
}

TensorVec step(const TensorVec& d, const Vec& delta, double alpha) {
  TensorVec out = d;
  for (std::size_t i = 0; i < 6; ++i) out[i] += alpha * delta[i];
  return out;
}

}  // namespace

std::string_view to_string(FitMethod m) {
  switch (m) {
    case FitMethod::linear: return "linear";
    case FitMethod::nonlinear: return "nonlinear";
    case FitMethod::mle: return "mle";
  }
  return "?";
}

FitMethod parse_fit_method(std::string_view name) {
  for (FitMethod m : {FitMethod::linear, FitMethod::nonlinear, FitMethod::mle})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown fit method '" + std::string(name) + "'");
}

FitReport fit_linear(std::span<const double> signals, const GradientScheme& g, double s0, FitOptions opts) {
  check_inputs(signals, g, s0);
  const double floor = 1e-12 * s0;
  FitReport r;
  Vec rhs{};
  std::vector<double> y(signals.size());
  for (std::size_t m = 0; m < signals.size(); ++m) {
    double s = signals[m];
    if (!(s > floor)) {
      s = floor;
      ++r.clamped;
    }
    y[m] = std::log(s0) - std::log(s);
    add_scaled(rhs, g.design(m), y[m]);
  }
  const auto sol = cholesky_solve(g.gram(), {rhs.data(), 6});
  for (std::size_t i = 0; i < 6; ++i) r.estimate[i] = sol[i];
  double res = 0.0;
  for (std::size_t m = 0; m < signals.size(); ++m) {
    const double e = y[m] - dot(g.design(m), r.estimate);
    res += e * e;
  }
  r.residual = std::sqrt(res);
  r.converged = true;
  finish(r, opts);
  return r;
}

FitReport fit_nonlinear(std::span<const double> signals, const GradientScheme& g, double s0,
                        std::optional<TensorVec> init, FitOptions opts) {
  check_inputs(signals, g, s0);
  FitReport r;
  TensorVec d;
  if (init) {
    d = *init;
  } else {
    const FitReport lin = fit_linear(signals, g, s0);
    d = lin.estimate;
    r.clamped = lin.clamped;
  }
  double obj = ls_objective(signals, g, s0, d);
  const double target = opts.tol * s0 * s0;
  for (;;) {
    Matrix h(6);
    Vec grad{};
    for (std::size_t m = 0; m < signals.size(); ++m) {
      const Vec6& x = g.design(m);
      const double mu = s0 * std::exp(-dot(x, d));
      add_outer(h, x, mu * mu);
      add_scaled(grad, x, (signals[m] - mu) * mu);
    }
    r.residual = norm6(grad);
    if (r.residual < target) {
      r.converged = true;
      break;
    }
    if (r.iterations >= opts.max_iter) break;
    Vec neg{};
    for (std::size_t i = 0; i < 6; ++i) neg[i] = -grad[i];
    const auto delta = solve_damped(h, neg);
    if (!delta) break;
    const double slack = rounding_level(signals, g, s0, d, 2.0);
    bool accepted = false;
    double alpha = 1.0;
    for (int halving = 0; halving <= 50; ++halving, alpha *= 0.5) {
      const TensorVec cand = step(d, *delta, alpha);
      const double f = ls_objective(signals, g, s0, cand);
      if (f <= obj + kRoundingSlack * obj + slack) {
        d = cand;
        obj = f;
        accepted = true;
        break;
      }
    }
    ++r.iterations;
    if (!accepted) break;
  }
  r.estimate = d;
  finish(r, opts);
  return r;
}

double rician_loglik(std::span<const double> signals, const GradientScheme& g, double s0, double sigma,
                     const TensorVec& d) {
  double l = 0.0;
  for (std::size_t m = 0; m < signals.size(); ++m)
    l += rician_logpdf({s0 * std::exp(-dot(g.design(m), d)), sigma}, signals[m]);
  return std::isfinite(l) ? l : -std::numeric_limits<double>::infinity();
}

FitReport fit_mle(std::span<const double> signals, const GradientScheme& g, double s0, double sigma,
                  std::optional<TensorVec> init, FitOptions opts) {
  check_inputs(signals, g, s0);
  if (!(sigma > 0.0)) throw std::invalid_argument("MLE needs a known positive sigma");
  FitReport r;
  TensorVec d;
  if (init) {
    d = *init;
  } else {
    const FitReport nl = fit_nonlinear(signals, g, s0, std::nullopt, opts);
    d = nl.estimate;
    r.clamped = nl.clamped;
  }
  const double s2 = sigma * sigma;
  double ll = rician_loglik(signals, g, s0, sigma, d);
  const double target = opts.tol * s0 * s0;
  for (;;) {
    Matrix neg_hess(6), fisher(6);
    Vec grad{};
    for (std::size_t m = 0; m < signals.size(); ++m) {
      const Vec6& x = g.design(m);
      const double mu = s0 * std::exp(-dot(x, d));
      const double s = signals[m];
      const double t = s * mu / s2;
      const double score = (-mu + s * bessel_ratio(t)) / s2;
      const double curv = (-1.0 + (s * s / s2) * bessel_ratio_derivative(t)) / s2;
      add_scaled(grad, x, -score * mu);
      add_outer(neg_hess, x, -(curv * mu * mu + score * mu));
      add_outer(fisher, x, mu * mu / s2);
    }
    r.residual = s2 * norm6(grad);
    if (r.residual < target) {
      r.converged = true;
      break;
    }
    if (r.iterations >= opts.max_iter) break;
    std::optional<Vec> delta;
    try {
      delta = cholesky_solve(neg_hess, {grad.data(), 6});
    } catch (const std::domain_error&) {
      delta = solve_damped(fisher, grad);
    }
    if (!delta) break;
    const double slack = rounding_level(signals, g, s0, d, 1.0 / s2);
    bool accepted = false;
    double alpha = 1.0;
    for (int halving = 0; halving <= 50; ++halving, alpha *= 0.5) {
      const TensorVec cand = step(d, *delta, alpha);
      const double l = rician_loglik(signals, g, s0, sigma, cand);
      if (l >= ll - kRoundingSlack * std::abs(ll) - slack) {
        d = cand;
        ll = l;
        accepted = true;
        break;
      }
    }
    ++r.iterations;
    if (!accepted) break;
  }
  r.estimate = d;
  finish(r, opts);
  return r;
}

Asymptotics asymptotic_quantities(const TensorVec& d0, const GradientScheme& g, double s0) {
  const SymMatrix d = tensor_from_vec(d0);
  Matrix w(6), v(6);
  std::vector<double> sbar(g.measurements());
  for (std::size_t m = 0; m < g.measurements(); ++m) {
    sbar[m] = noiseless_signal(d, g.design(m), s0);
    add_outer(w, g.design(m), sbar[m] * sbar[m]);
    add_outer(v, g.design(m), 1.0 / (sbar[m] * sbar[m]));
  }
  const Matrix a_inv = spd_inverse(g.gram());
  Asymptotics out;
  out.var_ls = a_inv * v * a_inv;
  out.var_nl = spd_inverse(w);
  Vec acc{};
  for (std::size_t m = 0; m < g.measurements(); ++m) {
    const Vec6& x = g.design(m);
    Vec xv{};
    for (std::size_t i = 0; i < 6; ++i) xv[i] = x[i];
    const double c = 1.0 - sbar[m] * sbar[m] * dot(x, mat_vec(out.var_nl, xv));
    out.bias_coefficients.push_back(c);
    add_scaled(acc, x, c);
  }
  const Vec6 b = mat_vec(out.var_nl, acc);
  for (std::size_t i = 0; i < 6; ++i) out.bias2_nl[i] = -0.5 * b[i];
  return out;
}

TensorVec low_snr_ls_bias(const TensorVec& d0, const GradientScheme& g, double s0, double sigma,
                          double informative_cut) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const SymMatrix d = tensor_from_vec(d0);
  Vec acc{};
  for (std::size_t m = 0; m < g.measurements(); ++m) {
    const Vec6& x = g.design(m);
    const double sbar = noiseless_signal(d, x, s0);
    if (!(sbar < informative_cut * sigma)) continue;
    const double snr = sbar / sigma;
    const double c = std::log(s0 / sigma) - 0.5 * expected_log_shifted_exp2(snr * snr) - dot(x, d0);
    add_scaled(acc, x, c);
  }
  const auto sol = cholesky_solve(g.gram(), {acc.data(), 6});
  TensorVec out{};
  for (std::size_t i = 0; i < 6; ++i) out[i] = sol[i];
  return out;
}

FieldFit fit_field(const DwiVolume& v, const GradientScheme& g, FitMethod method, double sigma, FitOptions opts,
                   Execution exec) {
  if (v.measurements != g.measurements()) throw std::invalid_argument("DWI volume does not match gradient scheme");
  FieldFit out;
  out.method = method;
  out.estimates = SymField(v.grid, SymMatrix(3));
  out.diagnostics.assign(v.grid.size(), {});
  opts.project = false;
  for_each_index(v.grid.size(), exec, [&](std::size_t idx) {
    const auto s = v.voxel(idx);
    FitReport r;
    switch (method) {
      case FitMethod::linear: r = fit_linear(s, g, v.s0, opts); break;
      case FitMethod::nonlinear: r = fit_nonlinear(s, g, v.s0, std::nullopt, opts); break;
      case FitMethod::mle: r = fit_mle(s, g, v.s0, sigma, std::nullopt, opts); break;
    }
    out.estimates.values[idx] = tensor_from_vec(r.estimate);
    out.diagnostics[idx] = {r.converged, r.iterations, r.residual, r.spd, r.clamped};
  });
  for (const auto& dg : out.diagnostics) {
    if (!dg.converged) ++out.not_converged;
    if (!dg.spd) ++out.not_spd;
  }
  return out;
}

}  // namespace tensmooth
