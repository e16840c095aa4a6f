#include "tensmooth/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "tensmooth/rng.hpp"

namespace tensmooth {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t sz(int i) { return static_cast<std::size_t>(i); }

double dd1(double a, double b) {
  if (a == b) return 1.0 / a;
  return (std::log(a) - std::log(b)) / (a - b);
}

double dd2(double a, double b, double c) {
  double v[3] = {a, b, c};
  std::sort(v, v + 3);
  if (v[0] == v[2]) return -0.5 / (v[0] * v[0]);
  return (dd1(v[0], v[1]) - dd1(v[1], v[2])) / (v[0] - v[2]);
}

Matrix in_basis(const Matrix& v, const SymMatrix& x) { return v.transpose() * x.dense() * v; }

SymMatrix from_basis(const Matrix& v, const Matrix& xt) { return SymMatrix(v * xt * v.transpose()); }

SymMatrix outer_sum(const Matrix& v, int n, const std::vector<int>& cols) {
  SymMatrix p(n);
  for (int c : cols)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) p.set(i, j, p(i, j) + v(i, c) * v(j, c));
  return p;
}

double mean_of(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

// Cluster index per eigenvalue position, clusters in decreasing order.
std::vector<int> cluster_ids(const EigDecomp& e, double tol) {
  std::vector<int> id(sz(e.n));
  int c = 0;
  for (int i = 1; i < e.n; ++i) {
    const double a = e.values[sz(i - 1)], b = e.values[sz(i)];
    if (std::abs(a - b) > tol * std::max(std::abs(a), std::abs(b))) ++c;
    id[sz(i)] = c;
  }
  return id;
}

bool mixed(const MeanSpectrum& s) {
  if (s.isotropic) return false;
  return std::any_of(s.multiplicity.begin(), s.multiplicity.end(), [](int m) { return m > 1; });
}

void require_simple(const MeanSpectrum& s, const char* who) {
  if (mixed(s)) throw std::domain_error(std::string(who) + ": mean has a repeated but not isotropic spectrum");
}

// E over the ensemble of f(B_m), with equal weights.
template <class F>
auto average(const std::vector<SymMatrix>& bs, F&& f) {
  auto acc = f(bs.front());
  for (std::size_t m = 1; m < bs.size(); ++m) acc += f(bs[m]);
  acc *= 1.0 / static_cast<double>(bs.size());
  return acc;
}

double average_scalar(const std::vector<SymMatrix>& bs, const auto& f) {
  double acc = 0.0;
  for (const auto& b : bs) acc += f(b);
  return acc / static_cast<double>(bs.size());
}

Matrix sq(const SymMatrix& b) { return b * b; }

std::vector<double> balanced_draws(RandomStream& rng, std::size_t size, Balancing bal) {
  std::vector<double> x(size);
  if (bal == Balancing::stratified) {
    const double m = static_cast<double>(size);
    for (std::size_t k = 0; k < size; ++k) x[k] = (2.0 * static_cast<double>(k) + 1.0 - m) / m;
    for (std::size_t k = size - 1; k > 0; --k) std::swap(x[k], x[rng.next_u64() % (k + 1)]);
    return x;
  }
  if (bal == Balancing::paired) {
    for (std::size_t k = 0; k < size / 2; ++k) {
      x[2 * k] = 2.0 * rng.uniform() - 1.0;
      x[2 * k + 1] = -x[2 * k];
    }
  } else {
    for (auto& v : x) v = 2.0 * rng.uniform() - 1.0;
    const double mu = mean_of(x);
    for (auto& v : x) v -= mu;
  }
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  for (auto& v : x) v /= peak;
  return x;
}

}  // namespace

std::string_view to_string(FamilyStyle s) {
  return s == FamilyStyle::additive_symmetric ? "additive" : "multiplicative";
}

std::string_view to_string(Balancing b) {
  switch (b) {
    case Balancing::centered: return "centered";
    case Balancing::paired: return "paired";
    case Balancing::stratified: return "stratified";
  }
  return "unknown";
}

MeanSpectrum mean_spectrum(const SpdTensor& s, double cluster_tol) {
  MeanSpectrum out;
  out.eig = sym_eig(s);
  const int n = out.eig.n;
  const auto id = cluster_ids(out.eig, cluster_tol);
  const int k = id.back() + 1;
  std::vector<std::vector<int>> cols(sz(k));
  for (int i = 0; i < n; ++i) cols[sz(id[sz(i)])].push_back(i);
  for (const auto& c : cols) {
    double m = 0.0;
    for (int i : c) m += out.eig.values[sz(i)];
    m /= static_cast<double>(c.size());
    for (int i : c) out.eig.values[sz(i)] = m;
    out.lambda.push_back(m);
    out.multiplicity.push_back(static_cast<int>(c.size()));
    out.projection.push_back(outer_sum(out.eig.vectors, n, c));
  }
  for (int j = 0; j < k; ++j) {
    SymMatrix h(n);
    for (int l = 0; l < k; ++l)
      if (l != j) h.add_scaled(out.projection[sz(l)], 1.0 / (out.lambda[sz(l)] - out.lambda[sz(j)]));
    out.resolvent.push_back(h);
  }
  out.isotropic = k == 1;
  out.c = 1.0 / out.lambda.back();
  for (int j = 0; j + 1 < k; ++j)
    out.c = std::max(out.c, 1.0 / (out.lambda[sz(j)] - out.lambda[sz(j + 1)]));
  return out;
}

PerturbationFamily make_family(const SpdTensor& base, double t, const FamilyOptions& opts) {
  if (!(t > 0.0)) throw std::invalid_argument("make_family: t must be positive");
  if (opts.size < 2) throw std::invalid_argument("make_family: need at least two members");
  if (opts.balancing == Balancing::paired && opts.size % 2)
    throw std::invalid_argument("make_family: paired families need an even size");
  if (!(opts.fill > 0.0 && opts.fill < 1.0)) throw std::invalid_argument("make_family: fill must lie in (0, 1)");
  const MeanSpectrum bs = mean_spectrum(base);
  for (std::size_t j = 0; j + 1 < bs.lambda.size(); ++j)
    if (bs.lambda[j] - bs.lambda[j + 1] < 10.0 * t)
      throw std::invalid_argument("make_family: eigenvalue gap below 10 t");
  const int n = base.dim();
  const RngSpec spec{opts.seed};

  PerturbationFamily fam;
  fam.t = t;
  fam.style = opts.style;
  fam.balancing = opts.balancing;
  fam.target = base;
  std::vector<SpdTensor> members;

  if (opts.style == FamilyStyle::additive_symmetric) {
    if (opts.balancing == Balancing::stratified)
      throw std::invalid_argument("make_family: stratified balancing is for multiplicative families");
    std::vector<SymMatrix> u(opts.size, SymMatrix(n));
    const std::size_t fresh = opts.balancing == Balancing::paired ? opts.size / 2 : opts.size;
    for (std::size_t m = 0; m < fresh; ++m) {
      RandomStream rng(spec, m, 0);
      SymMatrix x(n);
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) x.set(i, j, rng.normal());
      if (opts.balancing == Balancing::paired) {
        u[2 * m] = x;
        u[2 * m + 1] = x * -1.0;
      } else {
        u[m] = x;
      }
    }
    if (opts.balancing == Balancing::centered) {
      SymMatrix mu(n);
      for (const auto& x : u) mu.add_scaled(x, 1.0 / static_cast<double>(u.size()));
      for (auto& x : u) x -= mu;
    }
    double peak = 0.0;
    for (const auto& x : u) peak = std::max(peak, operator_norm(x));
    const double amp = opts.fill * t / (bs.c * peak);
    for (const auto& x : u) members.emplace_back(base.matrix() + x * amp);
  } else {
    fam.target_eig = bs.eig;
    const auto id = cluster_ids(sym_eig(base), 1e-9);
    const int groups = id.back() + 1;
    std::vector<std::vector<double>> xi;
    for (int g = 0; g < groups; ++g) {
      RandomStream rng(spec, static_cast<std::uint64_t>(g), 1);
      xi.push_back(balanced_draws(rng, opts.size, opts.balancing));
    }
    for (int i = 0; i < n; ++i) {
      fam.delta.push_back(bs.eig.values[sz(i)]);
      fam.exponent_scale.push_back(opts.fill / (fam.delta.back() * bs.c));
    }
    for (std::size_t m = 0; m < opts.size; ++m) {
      std::array<double, kMaxDim> d{};
      for (int i = 0; i < n; ++i)
        d[sz(i)] = fam.delta[sz(i)] * std::exp(fam.exponent_scale[sz(i)] * t * xi[sz(id[sz(i)])][m]);
      members.emplace_back(reconstruct(bs.eig, {d.data(), sz(n)}));
    }
  }

  fam.ensemble = WeightedEnsemble(std::move(members));
  fam.mean = mean_euclidean(fam.ensemble.view());
  fam.c = mean_spectrum(fam.mean).c;
  for (const auto& s : fam.ensemble.tensors()) fam.sup_norm = std::max(fam.sup_norm, operator_norm(s.matrix() - fam.mean.matrix()));
  if (fam.sup_norm >= t / fam.c) throw std::invalid_argument("make_family: perturbations exceed t / C");
  return fam;
}

std::vector<SymMatrix> deviations(const PerturbationFamily& fam) {
  std::vector<SymMatrix> out;
  for (const auto& s : fam.ensemble.tensors()) out.push_back(s.matrix() - fam.mean.matrix());
  return out;
}

SymMatrix expansion_log_euclidean(const PerturbationFamily& fam, const MeanSpectrum& spec) {
  require_simple(spec, "expansion_log_euclidean");
  const auto bs = deviations(fam);
  const int n = fam.mean.dim();
  if (spec.isotropic) {
    const double l = spec.lambda.front();
    return SymMatrix(average(bs, sq)) * (-0.5 / (l * l));
  }
  Matrix acc(n);
  for (std::size_t j = 0; j < spec.lambda.size(); ++j) {
    const double l = spec.lambda[j];
    const Matrix p = spec.projection[j].dense();
    const Matrix h = spec.resolvent[j].dense();
    const Matrix h2 = h * h;
    const double t1 = average_scalar(bs, [&](const SymMatrix& b) {
      const Matrix bd = b.dense();
      return (p * bd * h * bd).trace();
    });
    const double t2 = average_scalar(bs, [&](const SymMatrix& b) {
      const double tr = (p * b.dense()).trace();
      return tr * tr;
    });
    acc += p * (-t1 / l - 0.5 * t2 / (l * l));
    const Matrix t3 = average(bs, [&](const SymMatrix& b) {
      const Matrix bd = b.dense();
      return p * bd * h * bd * h + h * bd * p * bd * h + h * bd * h * bd * p - p * bd * p * bd * h2 -
             p * bd * h2 * bd * p - h2 * bd * p * bd * p;
    });
    acc += t3 * std::log(l);
    const Matrix t4 = average(bs, [&](const SymMatrix& b) {
      const Matrix bd = b.dense();
      return ((p * bd * h) + (h * bd * p)) * (p * bd).trace();
    });
    acc += t4 * (-1.0 / l);
  }
  return SymMatrix(acc);
}

namespace {

Matrix expected_sandwich(const std::vector<SymMatrix>& bs, const SpdTensor& mean) {
  const Matrix inv = mat_inverse(mean).matrix().dense();
  return average(bs, [&](const SymMatrix& b) {
    const Matrix bd = b.dense();
    return bd * inv * bd;
  });
}

}  // namespace

AffineExpansion expansion_affine(const PerturbationFamily& fam, const MeanSpectrum& spec) {
  require_simple(spec, "expansion_affine");
  const auto bs = deviations(fam);
  const int n = fam.mean.dim();
  const SymMatrix y(expected_sandwich(bs, fam.mean));
  SymMatrix mp = fam.mean.matrix();
  mp.add_scaled(y, -0.5);
  if (spec.isotropic) {
    const double l = spec.lambda.front();
    return {SymMatrix(average(bs, sq)) * (-0.5 / (l * l)), SpdTensor(mp)};
  }
  const Matrix yd = y.dense();
  Matrix acc(n);
  for (std::size_t j = 0; j < spec.lambda.size(); ++j) {
    const double l = spec.lambda[j];
    const Matrix p = spec.projection[j].dense();
    const Matrix h = spec.resolvent[j].dense();
    acc += p * (-0.5 * (p * yd).trace() / l);
    acc += (p * yd * h + h * yd * p) * (0.5 * std::log(l));
  }
  return {SymMatrix(acc), SpdTensor(mp)};
}

LogDetExpansion logdet_expansions(const PerturbationFamily& fam, const MeanSpectrum& spec) {
  const auto bs = deviations(fam);
  LogDetExpansion out;
  if (mixed(spec)) {
    out.le = second_order_log_mean(fam, spec).trace();
  } else if (spec.isotropic) {
    const double l = spec.lambda.front();
    out.le = -0.5 * average(bs, sq).trace() / (l * l);
  } else {
    for (std::size_t j = 0; j < spec.lambda.size(); ++j) {
      const double l = spec.lambda[j];
      const Matrix p = spec.projection[j].dense();
      const Matrix h = spec.resolvent[j].dense();
      out.le -= average_scalar(bs, [&](const SymMatrix& b) {
        const Matrix bd = b.dense();
        const double tr = (p * bd).trace();
        return (p * bd * h * bd).trace() / l + 0.5 * tr * tr / (l * l);
      });
    }
  }
  const Matrix y = expected_sandwich(bs, fam.mean);
  for (std::size_t j = 0; j < spec.lambda.size(); ++j)
    out.aff -= 0.5 * (spec.projection[j].dense() * y).trace() / spec.lambda[j];
  return out;
}

SymMatrix second_order_log_mean(const PerturbationFamily& fam, const MeanSpectrum& spec) {
  const auto bs = deviations(fam);
  const int n = fam.mean.dim();
  const Matrix& v = spec.eig.vectors;
  const auto& l = spec.eig.values;
  Matrix acc(n);
  for (const auto& b : bs) {
    const Matrix bt = in_basis(v, b);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += dd2(l[sz(i)], l[sz(j)], l[sz(k)]) * bt(i, j) * bt(j, k);
        acc(i, k) += s;
      }
  }
  acc *= 1.0 / static_cast<double>(bs.size());
  return from_basis(v, acc);
}

SymMatrix log_derivative(const MeanSpectrum& spec, const SymMatrix& x) {
  const Matrix& v = spec.eig.vectors;
  const auto& l = spec.eig.values;
  Matrix xt = in_basis(v, x);
  for (int i = 0; i < spec.eig.n; ++i)
    for (int k = 0; k < spec.eig.n; ++k) xt(i, k) *= dd1(l[sz(i)], l[sz(k)]);
  return from_basis(v, xt);
}

SymMatrix affine_log_prediction_general(const PerturbationFamily& fam, const MeanSpectrum& spec) {
  const SymMatrix y(expected_sandwich(deviations(fam), fam.mean));
  return log_derivative(spec, y * -0.5);
}

ExactMeans exact_means(const PerturbationFamily& fam) {
  const auto v = fam.ensemble.view();
  return {mean_log_euclidean(v), mean_affine_fixed_point(v, {1e-12, 500}).mean};
}

MultiplicativeBias multiplicative_bias(const PerturbationFamily& fam) {
  if (fam.style != FamilyStyle::multiplicative)
    throw std::invalid_argument("multiplicative_bias: family is not multiplicative");
  MultiplicativeBias out;
  const Matrix d = in_basis(fam.target_eig.vectors, fam.mean.matrix() - fam.target.matrix());
  for (std::size_t i = 0; i < fam.delta.size(); ++i) {
    const int ii = static_cast<int>(i);
    out.observed.push_back(d(ii, ii) / fam.delta[i]);
    const double x = fam.exponent_scale[i] * fam.t;
    out.predicted.push_back(std::sinh(x) / x - 1.0);
  }
  return out;
}

std::vector<OrderCheckRow> order_check(const std::string& base_name, const SpdTensor& base,
                                       const OrderCheckOptions& opts) {
  struct Series {
    std::string name;
    std::vector<double> residual;
  };
  std::vector<Series> series{{"log_euclidean", {}}, {"affine", {}}, {"affine_mean", {}}};
  std::string label;
  for (double t : opts.ts) {
    const PerturbationFamily fam = make_family(base, t, opts.family);
    const MeanSpectrum spec = mean_spectrum(fam.mean);
    label = spec.isotropic ? "isotropic" : mixed(spec) ? "mixed" : "distinct";
    const ExactMeans ex = exact_means(fam);
    const SymMatrix log_mean = mat_log(fam.mean);
    const bool closed = !mixed(spec);
    const SymMatrix p1 = closed ? expansion_log_euclidean(fam, spec) : second_order_log_mean(fam, spec);
    const SymMatrix p2 = closed ? expansion_affine(fam, spec).log_prediction : affine_log_prediction_general(fam, spec);
    SymMatrix mp = fam.mean.matrix();
    mp.add_scaled(SymMatrix(expected_sandwich(deviations(fam), fam.mean)), -0.5);
    series[0].residual.push_back((mat_log(ex.log_euclidean) - log_mean - p1).frobenius_norm());
    series[1].residual.push_back((mat_log(ex.affine) - log_mean - p2).frobenius_norm());
    series[2].residual.push_back((ex.affine.matrix() - mp).frobenius_norm());
  }
  std::vector<OrderCheckRow> rows;
  for (const auto& s : series)
    for (std::size_t i = 0; i < opts.ts.size(); ++i) {
      OrderCheckRow r;
      r.proposition = s.name;
      r.case_label = label;
      r.base = base_name;
      r.style = std::string(to_string(opts.family.style));
      r.t = opts.ts[i];
      r.residual = s.residual[i];
      r.ratio = i + 1 < opts.ts.size() ? s.residual[i] / s.residual[i + 1] : kNaN;
      r.pass = std::isnan(r.ratio) || (r.ratio >= opts.ratio_lo && r.ratio <= opts.ratio_hi);
      rows.push_back(std::move(r));
    }
  return rows;
}

}  // namespace tensmooth
