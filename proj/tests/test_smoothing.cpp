#include <map>

#include "support.hpp"
#include "tensmooth/analysis.hpp"
#include "tensmooth/karcher.hpp"
#include "tensmooth/phantom.hpp"
#include "tensmooth/smoothing.hpp"

using namespace tensmooth;
using test::max_diff;

namespace {

struct Row {
  double h;
  std::size_t size, n99;
  double min, median, max, entropy;
};

// Neighbourhood size and weight summaries for isotropic smoothing.
constexpr Row kPublishedProfiles[] = {
    {0.005, 5, 1, 0.000881, 0.000881, 0.996477, 0.0283},
    {0.01, 23, 9, 0.000002, 0.000487, 0.551461, 1.5140},
    {0.025, 147, 113, 0.000061, 0.002371, 0.071480, 4.0034},
};

/// Straight enumeration of the window, written independently of the library.
std::vector<double> brute_weights(const Grid& g, int ci, int cj, int ck, double h) {
  std::vector<double> w;
  for (int dk = -1; dk <= 1; ++dk)
    for (int dj = -3; dj <= 3; ++dj)
      for (int di = -3; di <= 3; ++di) {
        if (!g.contains(ci + di, cj + dj, ck + dk)) continue;
        const double x = di * g.spacing[0], y = dj * g.spacing[1], z = dk * g.spacing[2];
        const double k = std::exp(-(x * x + y * y + z * z) / (2 * h * h));
        if (k >= 1e-6) w.push_back(k);
      }
  double s = 0.0;
  for (double v : w) s += v;
  for (double& v : w) v /= s;
  return w;
}

bool same_bits(const TensorField& a, const TensorField& b) {
  for (std::size_t i = 0; i < a.values.size(); ++i)
    for (int p = 0; p < 6; ++p)
      if (a.values[i].matrix().packed()[p] != b.values[i].matrix().packed()[p]) return false;
  return true;
}

TensorField random_field(Grid g, std::uint64_t seed) {
  TensorField f(g, SpdTensor::identity(3));
  RandomStream rng({seed}, 0, 0);
  for (auto& v : f.values) v = test::random_spd(rng, 0.1, 10.0);
  return f;
}

}  // namespace

TEST_CASE("isotropic weights reproduce the published neighbourhood profile") {
  const Grid g;
  const std::size_t c = g.index(64, 64, 1);
  for (const Row& r : kPublishedProfiles) {
    CAPTURE(r.h);
    const WeightMap w = iso_weights(g, c, r.h);
    const WeightProfile p = weight_profile(w);
    CHECK(p.size == r.size);
    CHECK(p.n99 == r.n99);
    CHECK(p.min == doctest::Approx(r.min).epsilon(r.min < 1e-5 ? 0.5 : 5e-4));
    CHECK(p.median == doctest::Approx(r.median).epsilon(5e-4));
    CHECK(p.max == doctest::Approx(r.max).epsilon(5e-4));
    CHECK(std::abs(p.entropy - r.entropy) < 1e-3);

    std::vector<double> brute = brute_weights(g, 64, 64, 1, r.h);
    std::vector<double> got;
    for (const auto& nw : w) got.push_back(nw.weight);
    std::sort(brute.begin(), brute.end());
    std::sort(got.begin(), got.end());
    REQUIRE(got.size() == brute.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(brute[i]).epsilon(1e-13));
  }
}

TEST_CASE("weight maps are ordered, normalized and renormalized at the border") {
  const Grid g;
  for (std::size_t c : {g.index(64, 64, 1), g.index(0, 0, 0), g.index(127, 3, 3)}) {
    const WeightMap w = iso_weights(g, c, 0.025);
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      s += w[i].weight;
      if (i > 0) {
        CHECK(w[i - 1].dist2 <= w[i].dist2);
        if (w[i - 1].dist2 == w[i].dist2) CHECK(w[i - 1].index < w[i].index);
      }
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(w.front().index == c);
  }
  CHECK(iso_weights(g, g.index(0, 0, 0), 0.025).size() < iso_weights(g, g.index(64, 64, 1), 0.025).size());
  const auto [ci, cj, ck] = g.coords(g.index(0, 0, 0));
  CHECK(iso_weights(g, g.index(0, 0, 0), 0.01).size() == brute_weights(g, ci, cj, ck, 0.01).size());
}

TEST_CASE("anisotropic weights") {
  const Grid g;
  const std::size_t c = g.index(64, 64, 1);
  // D = aI gives tr(D) D^{-1} = 3I: isotropic weights at bandwidth h / sqrt 3.
  const WeightMap a = aniso_weights(g, c, SpdTensor::diagonal({2.5, 2.5, 2.5}), 0.02);
  const WeightMap b = iso_weights(g, c, 0.02 / std::sqrt(3.0));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].index == b[i].index);
    CHECK(a[i].weight == doctest::Approx(b[i].weight).epsilon(1e-12));
  }
  // The kernel stretches along the principal direction.
  const WeightMap y = aniso_weights(g, c, SpdTensor::diagonal({0.25, 16, 0.25}), 0.01);
  std::map<std::size_t, double> wy;
  for (const auto& nw : y) wy[nw.index] = nw.weight;
  CHECK(wy[g.index(64, 65, 1)] > wy[g.index(65, 64, 1)]);
  // Scale invariance of tr(D) D^{-1}.
  const WeightMap y2 = aniso_weights(g, c, SpdTensor::diagonal({0.5, 32, 0.5}), 0.01);
  REQUIRE(y2.size() == y.size());
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y2[i].weight == doctest::Approx(y[i].weight).epsilon(1e-12));

  bool fell = false;
  aniso_weights(g, c, SpdTensor::diagonal({0.25, 16, 0.25}), 0.01, {}, &fell);
  CHECK_FALSE(fell);
  const WeightMap f = aniso_weights(g, c, SpdTensor(SymMatrix::diagonal({1.0, 1e-11, 1.0}), 1e-14), 0.01, {}, &fell);
  CHECK(fell);
  CHECK(f.size() == iso_weights(g, c, 0.01).size());
}

TEST_CASE("weight profile arithmetic") {
  const std::vector<double> u(10, 0.1);
  const WeightProfile p = weight_profile(u);
  CHECK(p.size == 10);
  CHECK(p.n99 == 10);
  CHECK(p.entropy == doctest::Approx(std::log(10.0)));
  CHECK(p.median == doctest::Approx(0.1));
  const WeightProfile one = weight_profile(std::vector<double>{1.0});
  CHECK(one.n99 == 1);
  CHECK(one.entropy == 0.0);
  const WeightProfile skew = weight_profile(std::vector<double>{0.995, 0.004, 0.001});
  CHECK(skew.n99 == 1);
  CHECK(skew.median == doctest::Approx(0.004));
}

TEST_CASE("a constant field is a fixed point of every smoother") {
  Grid g;
  g.dims = {12, 12, 3};
  const SpdTensor d = SpdTensor::diagonal({0.5, 4, 0.5});
  const TensorField f(g, d);
  for (Metric m : {Metric::euclidean, Metric::log_euclidean, Metric::affine})
    for (SchemeKind s : {SchemeKind::isotropic, SchemeKind::anisotropic}) {
      SmoothingConfig cfg;
      cfg.metric = m;
      cfg.scheme = s;
      cfg.h = 0.025;
      const SmoothResult r = smooth_field(f, cfg);
      double worst = 0.0;
      for (const auto& v : r.field.values) worst = std::max(worst, max_diff(v, d));
      CHECK(worst < 1e-12);
    }
}

TEST_CASE("two-voxel field with equal weights gives the metric midpoint") {
  Grid g;
  g.dims = {2, 1, 1};
  const SpdTensor x = SpdTensor::diagonal({16, 0.25, 0.25}), y = SpdTensor::diagonal({0.25, 16, 0.25});
  TensorField f(g, x);
  f.values[1] = y;
  const WeightedEnsemble e({x, y});
  for (Metric m : {Metric::euclidean, Metric::log_euclidean, Metric::affine}) {
    SmoothingConfig cfg;
    cfg.metric = m;
    cfg.h = 1e6;
    const SmoothResult r = smooth_field(f, cfg);
    const SpdTensor mid = weighted_mean(m, e.view());
    CHECK(max_diff(r.field.values[0], mid) < 1e-9);
    CHECK(max_diff(r.field.values[1], mid) < 1e-9);
  }
  SmoothingConfig cfg;
  cfg.metric = Metric::euclidean;
  cfg.h = 1e6;
  CHECK(smooth_field(f, cfg).field.values[0].determinant() == doctest::Approx(8.125 * 8.125 * 0.25));
}

TEST_CASE("per-voxel outputs match the weighted means of the neighbourhood") {
  Grid g;
  g.dims = {10, 9, 3};
  const TensorField f = random_field(g, 60);
  for (Metric m : {Metric::euclidean, Metric::log_euclidean, Metric::affine}) {
    SmoothingConfig cfg;
    cfg.metric = m;
    cfg.h = 0.02;
    const SmoothResult r = smooth_field(f, cfg);
    for (std::size_t c : {g.index(5, 4, 1), g.index(0, 8, 2)}) {
      const WeightMap w = iso_weights(g, c, cfg.h);
      std::vector<SpdTensor> ts;
      std::vector<double> ws;
      for (const auto& nw : w) {
        ts.push_back(f.values[nw.index]);
        ws.push_back(nw.weight);
      }
      const WeightedEnsemble e(ts, ws);
      const SpdTensor want = m == Metric::affine ? mean_affine_recursive(e.view()) : weighted_mean(m, e.view());
      CHECK(max_diff(r.field.values[c], want) < 1e-12 * want.matrix().frobenius_norm());
    }
  }
}

TEST_CASE("anisotropic smoothing reweights the stage-one field") {
  Grid g;
  g.dims = {9, 9, 3};
  const TensorField f = random_field(g, 61);
  SmoothingConfig cfg;
  cfg.scheme = SchemeKind::anisotropic;
  cfg.h = 0.01;
  cfg.h_aniso = 0.02;
  const SmoothResult r = smooth_field(f, cfg);
  SmoothingConfig stage1 = cfg;
  stage1.scheme = SchemeKind::isotropic;
  const TensorField pilot = smooth_field(f, stage1).field;
  const std::size_t c = g.index(4, 4, 1);
  const WeightMap w = aniso_weights(g, c, pilot.values[c], cfg.h_aniso);
  std::vector<SpdTensor> ts;
  std::vector<double> ws;
  for (const auto& nw : w) {
    ts.push_back(pilot.values[nw.index]);
    ws.push_back(nw.weight);
  }
  CHECK(max_diff(r.field.values[c], mean_log_euclidean(WeightedEnsemble(ts, ws).view())) < 1e-12);
}

TEST_CASE("geometric smoothers agree on commuting fields") {
  Grid g;
  g.dims = {8, 8, 2};
  TensorField f(g, SpdTensor::identity(3));
  RandomStream rng({62}, 0, 0);
  for (auto& v : f.values) v = SpdTensor::diagonal({0.1 + 5 * rng.uniform(), 0.1 + 5 * rng.uniform(), 0.1 + 5 * rng.uniform()});
  SmoothingConfig cfg;
  cfg.h = 0.025;
  cfg.metric = Metric::log_euclidean;
  const TensorField le = smooth_field(f, cfg).field;
  cfg.metric = Metric::affine;
  const TensorField af = smooth_field(f, cfg).field;
  double worst = 0.0;
  for (std::size_t i = 0; i < le.values.size(); ++i) worst = std::max(worst, max_diff(le.values[i], af.values[i]));
  CHECK(worst < 1e-11);
}

TEST_CASE("serial and parallel smoothing give identical bits") {
  Grid g;
  g.dims = {16, 12, 3};
  const TensorField f = random_field(g, 63);
  for (Metric m : {Metric::euclidean, Metric::log_euclidean, Metric::affine})
    for (SchemeKind s : {SchemeKind::isotropic, SchemeKind::anisotropic}) {
      SmoothingConfig cfg;
      cfg.metric = m;
      cfg.scheme = s;
      const SmoothResult a = smooth_field(f, cfg, Execution::serial);
      const SmoothResult b = smooth_field(f, cfg, Execution::parallel);
      CHECK(same_bits(a.field, b.field));
      CHECK(a.aniso_fallbacks == b.aniso_fallbacks);
    }
}

TEST_CASE("swelling at the band crossing") {
  const PhantomConfig cfg = crossing_toy_config();
  const TensorField f = build_phantom(cfg);
  for (const auto& v : f.values) CHECK(v.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  SmoothingConfig sc;
  sc.h = 0.01;
  sc.metric = Metric::euclidean;
  const TensorField eu = smooth_field(f, sc).field;
  const auto ratios = swelling_ratios(f, eu);
  // The centre weight 0.55 at h = 0.01 keeps the mix short of the midpoint.
  CHECK(*std::max_element(ratios.begin(), ratios.end()) > 9.0);
  sc.h = 0.025;
  const auto wide = swelling_ratios(f, smooth_field(f, sc).field);
  CHECK(*std::max_element(wide.begin(), wide.end()) > 10.0);
  for (Metric m : {Metric::log_euclidean, Metric::affine}) {
    sc.metric = m;
    const TensorField out = smooth_field(f, sc).field;
    for (const auto& v : out.values) CHECK(v.determinant() <= 1.0 + 1e-9);
  }
}

TEST_CASE("Euclidean smoothing of symmetric fields") {
  Grid g;
  g.dims = {6, 6, 2};
  const TensorField f = random_field(g, 64);
  SmoothingConfig cfg;
  cfg.metric = Metric::euclidean;
  cfg.h = 0.02;
  const SymSmoothResult s = smooth_field_euclidean(to_sym_field(f), cfg);
  const SmoothResult t = smooth_field(f, cfg);
  for (std::size_t i = 0; i < f.values.size(); ++i) CHECK(max_diff(s.field.values[i], t.field.values[i]) < 1e-14);

  // An indefinite voxel is averaged linearly like any other.
  SymField raw = to_sym_field(f);
  raw.values[g.index(2, 2, 0)] = SymMatrix::diagonal({-1.0, 1.0, 1.0});
  cfg.scheme = SchemeKind::anisotropic;
  CHECK_NOTHROW(smooth_field_euclidean(raw, cfg));
}

TEST_CASE("scheme names round-trip") {
  for (SchemeKind s : {SchemeKind::isotropic, SchemeKind::anisotropic}) CHECK(parse_scheme(to_string(s)) == s);
  CHECK_THROWS(parse_scheme("adaptive"));
}
