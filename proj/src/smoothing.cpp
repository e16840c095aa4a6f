#include "tensmooth/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "tensmooth/karcher.hpp"
#include "tensmooth/parallel.hpp"

namespace tensmooth {

namespace {

struct Offset {
  int di, dj, dk;
  std::ptrdiff_t linear;
  double dist2;
  Vec3 ds;
};

// Window offsets sorted by distance then linear offset; the order is the
// same for every centre, so it doubles as the affine pre-ordering.
std::vector<Offset> window_offsets(const Grid& g, const WeightOptions& opts) {
  std::vector<Offset> out;
  const auto& w = opts.window;
  for (int dk = -w[2]; dk <= w[2]; ++dk)
    for (int dj = -w[1]; dj <= w[1]; ++dj)
      for (int di = -w[0]; di <= w[0]; ++di) {
        const Vec3 ds{di * g.spacing[0], dj * g.spacing[1], dk * g.spacing[2]};
        const double d2 = ds[0] * ds[0] + ds[1] * ds[1] + ds[2] * ds[2];
        const std::ptrdiff_t lin = di + static_cast<std::ptrdiff_t>(g.dims[0]) *
                                            (dj + static_cast<std::ptrdiff_t>(g.dims[1]) * dk);
        out.push_back({di, dj, dk, lin, d2, ds});
      }
  std::stable_sort(out.begin(), out.end(), [](const Offset& a, const Offset& b) {
    if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
    return a.linear < b.linear;
  });
  return out;
}

void check_bandwidth(double h, const WeightOptions& opts) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("bandwidth must be positive");
  if (!(opts.threshold > 0.0 && opts.threshold < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
  for (int w : opts.window)
    if (w < 0) throw std::invalid_argument("window half-extent must be >= 0");
}

template <class Raw>
WeightMap collect(const Grid& g, std::size_t center, const std::vector<Offset>& offsets, double threshold, Raw&& raw) {
  const auto c = g.coords(center);
  WeightMap out;
  double total = 0.0;
  for (const Offset& o : offsets) {
    if (!g.contains(c[0] + o.di, c[1] + o.dj, c[2] + o.dk)) continue;
    const double w = raw(o);
    if (w < threshold) continue;
    out.push_back({static_cast<std::size_t>(static_cast<std::ptrdiff_t>(center) + o.linear), w, o.dist2});
    total += w;
  }
  for (auto& n : out) n.weight /= total;
  return out;
}

WeightMap iso_with(const Grid& g, std::size_t center, const std::vector<Offset>& offsets, double h, double thr) {
  const double scale = 1.0 / (2.0 * h * h);
  return collect(g, center, offsets, thr, [scale](const Offset& o) { return std::exp(-o.dist2 * scale); });
}

// Anisotropic weights given the matrix tr(D) D^{-1}.
WeightMap aniso_with(const Grid& g, std::size_t center, const std::vector<Offset>& offsets, const SymMatrix& metric,
                     double h, double thr) {
  const double scale = 1.0 / (2.0 * h * h);
  return collect(g, center, offsets, thr, [&](const Offset& o) {
    double q = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) q += o.ds[static_cast<std::size_t>(i)] * metric(i, j) * o.ds[static_cast<std::size_t>(j)];
    return std::exp(-q * scale);
  });
}

// tr(D) D^{-1}, or nothing when D is not usable for anisotropic weights.
std::optional<SymMatrix> aniso_metric(const SymMatrix& d) {
  if (d.dim() != 3 || !d.is_finite()) return std::nullopt;
  const EigDecomp e = sym_eig(d);
  if (!(e.min_value() > 0.0) || e.max_value() / e.min_value() > 1e10) return std::nullopt;
  const double tr = d.trace();
  return spectral_map(e, [tr](double l) { return tr / l; });
}

// Applies `combine` to every voxel's neighbourhood. weights_for(idx) returns
// the weight map and whether it fell back to isotropic.
template <class Out, class WeightsFor, class Combine>
std::size_t apply(std::size_t n, Execution exec, std::vector<Out>& out, WeightsFor&& weights_for, Combine&& combine) {
  std::vector<unsigned char> fell(n, 0);
  for_each_index(n, exec, [&](std::size_t idx) {
    bool fb = false;
    const WeightMap w = weights_for(idx, fb);
    fell[idx] = fb ? 1 : 0;
    out[idx] = combine(w);
  });
  return static_cast<std::size_t>(std::count(fell.begin(), fell.end(), 1));
}

class TensorCombiner {
 public:
  TensorCombiner(const TensorField& f, Metric metric, Execution exec) : f_(f), metric_(metric) {
    if (metric_ == Metric::log_euclidean) {
      logs_.resize(f.values.size());
      for_each_index(f.values.size(), exec, [&](std::size_t i) { logs_[i] = mat_log(f.values[i]); });
    }
  }

  SpdTensor operator()(const WeightMap& w) const {
    const int n = f_.values.empty() ? 3 : f_.values.front().dim();
    switch (metric_) {
      case Metric::euclidean: {
        SymMatrix acc(n);
        for (const auto& nb : w) acc.add_scaled(f_.values[nb.index], nb.weight);
        return SpdTensor::unchecked(acc);
      }
      case Metric::log_euclidean: {
        SymMatrix acc(n);
        for (const auto& nb : w) acc.add_scaled(logs_[nb.index], nb.weight);
        return mat_exp(acc);
      }
      case Metric::affine: {
        std::vector<SpdTensor> ts;
        std::vector<double> ws;
        ts.reserve(w.size());
        ws.reserve(w.size());
        for (const auto& nb : w) {
          ts.push_back(f_.values[nb.index]);
          ws.push_back(nb.weight);
        }
        return mean_affine_recursive({ts, ws});
      }
    }
    throw std::invalid_argument("unknown metric");
  }

 private:
  const TensorField& f_;
  Metric metric_;
  std::vector<SymMatrix> logs_;
};

}  // namespace

WeightMap iso_weights(const Grid& g, std::size_t center, double h, const WeightOptions& opts) {
  check_bandwidth(h, opts);
  return iso_with(g, center, window_offsets(g, opts), h, opts.threshold);
}

WeightMap aniso_weights(const Grid& g, std::size_t center, const SpdTensor& d, double h, const WeightOptions& opts,
                        bool* fell_back) {
  check_bandwidth(h, opts);
  const auto offsets = window_offsets(g, opts);
  const auto metric = aniso_metric(d);
  if (fell_back) *fell_back = !metric;
  if (!metric) return iso_with(g, center, offsets, h, opts.threshold);
  return aniso_with(g, center, offsets, *metric, h, opts.threshold);
}

WeightProfile weight_profile(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("weight profile of an empty neighbourhood");
  std::vector<double> w(weights.begin(), weights.end());
  std::sort(w.begin(), w.end());
  WeightProfile p;
  p.size = w.size();
  p.min = w.front();
  p.max = w.back();
  const std::size_t mid = w.size() / 2;
  p.median = w.size() % 2 ? w[mid] : 0.5 * (w[mid - 1] + w[mid]);
  double cum = 0.0;
  for (auto it = w.rbegin(); it != w.rend(); ++it) {
    cum += *it;
    ++p.n99;
    if (cum >= 0.99) break;
  }
  for (double x : w)
    if (x > 0.0) p.entropy -= x * std::log(x);
  return p;
}

WeightProfile weight_profile(const WeightMap& w) {
  std::vector<double> v;
  v.reserve(w.size());
  for (const auto& n : w) v.push_back(n.weight);
  return weight_profile(v);
}

std::string_view to_string(SchemeKind s) {
  return s == SchemeKind::isotropic ? "isotropic" : "anisotropic";
}

SchemeKind parse_scheme(std::string_view name) {
  if (name == "isotropic" || name == "iso") return SchemeKind::isotropic;
  if (name == "anisotropic" || name == "aniso") return SchemeKind::anisotropic;
  throw std::invalid_argument("unknown smoothing scheme '" + std::string(name) + "'");
}

SmoothResult smooth_field(const TensorField& f, const SmoothingConfig& cfg, Execution exec) {
  check_bandwidth(cfg.h, cfg.weights);
  const Grid& g = f.grid;
  const auto offsets = window_offsets(g, cfg.weights);
  const double thr = cfg.weights.threshold;
  auto iso = [&](std::size_t idx, bool&) { return iso_with(g, idx, offsets, cfg.h, thr); };

  SmoothResult r;
  r.field.grid = g;
  r.field.values.resize(f.values.size());
  apply(f.values.size(), exec, r.field.values, iso, TensorCombiner(f, cfg.metric, exec));
  if (cfg.scheme == SchemeKind::isotropic) return r;

  check_bandwidth(cfg.h_aniso, cfg.weights);
  const TensorField stage1 = std::move(r.field);
  r.field = TensorField(g, std::vector<SpdTensor>(f.values.size()));
  auto aniso = [&](std::size_t idx, bool& fb) {
    const auto metric = aniso_metric(stage1.values[idx]);
    fb = !metric;
    return metric ? aniso_with(g, idx, offsets, *metric, cfg.h_aniso, thr) : iso_with(g, idx, offsets, cfg.h_aniso, thr);
  };
  r.aniso_fallbacks = apply(f.values.size(), exec, r.field.values, aniso, TensorCombiner(stage1, cfg.metric, exec));
  return r;
}

SymSmoothResult smooth_field_euclidean(const SymField& f, const SmoothingConfig& cfg, Execution exec) {
  check_bandwidth(cfg.h, cfg.weights);
  const Grid& g = f.grid;
  const auto offsets = window_offsets(g, cfg.weights);
  const double thr = cfg.weights.threshold;
  const int n = f.values.empty() ? 3 : f.values.front().dim();
  auto mean_of = [n](const SymField& src) {
    return [&src, n](const WeightMap& w) {
      SymMatrix acc(n);
      for (const auto& nb : w) acc.add_scaled(src.values[nb.index], nb.weight);
      return acc;
    };
  };
  auto iso = [&](std::size_t idx, bool&) { return iso_with(g, idx, offsets, cfg.h, thr); };

  SymSmoothResult r;
  r.field.grid = g;
  r.field.values.resize(f.values.size());
  apply(f.values.size(), exec, r.field.values, iso, mean_of(f));
  if (cfg.scheme == SchemeKind::isotropic) return r;

  check_bandwidth(cfg.h_aniso, cfg.weights);
  const SymField stage1 = std::move(r.field);
  r.field = SymField(g, std::vector<SymMatrix>(f.values.size()));
  auto aniso = [&](std::size_t idx, bool& fb) {
    const auto metric = aniso_metric(stage1.values[idx]);
    fb = !metric;
    return metric ? aniso_with(g, idx, offsets, *metric, cfg.h_aniso, thr) : iso_with(g, idx, offsets, cfg.h_aniso, thr);
  };
  r.aniso_fallbacks = apply(f.values.size(), exec, r.field.values, aniso, mean_of(stage1));
  return r;
}

}  // namespace tensmooth
