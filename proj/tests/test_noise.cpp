#include "support.hpp"
#include "tensmooth/noise.hpp"
#include "tensmooth/phantom.hpp"
#include "tensmooth/rician.hpp"

using namespace tensmooth;

TEST_CASE("gradient scheme") {
  const GradientScheme g = default_scheme(2);
  CHECK(g.measurements() == 18);
  CHECK(g.directions().size() == 9);
  CHECK(default_scheme(3).measurements() == 27);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(g.directions()[0][0] == doctest::Approx(r));
  CHECK(g.directions()[0][1] == 0.0);
  CHECK(g.directions()[0][2] == doctest::Approx(r));
  const Vec6 x = design_vector({1, 0, 0});
  CHECK(x == Vec6{1, 0, 0, 0, 0, 0});
  for (const auto& dir : g.directions()) CHECK(std::hypot(dir[0], dir[1], dir[2]) == doctest::Approx(1.0));
  CHECK(g.direction_of(0) == 0);
  CHECK(g.direction_of(1) == 0);
  CHECK(g.direction_of(2) == 1);

  CHECK_THROWS(GradientScheme({{0, 0, 0}, {1, 0, 0}}, 1));
  // Six directions in one plane cannot identify a 3D tensor.
  CHECK_THROWS(GradientScheme({{1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, -1, 0}, {2, 1, 0}, {1, 2, 0}}, 1));
}

TEST_CASE("design vector contracts with the tensor as a quadratic form") {
  RandomStream rng({30}, 0, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const SymMatrix d = test::random_sym(rng);
    const Vec3 b{rng.normal(), rng.normal(), rng.normal()};
    double q = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) q += b[i] * d(i, j) * b[j];
    const Vec6 x = design_vector(b), v = tensor_to_vec(d);
    double dot = 0.0;
    for (int i = 0; i < 6; ++i) dot += x[i] * v[i];
    CHECK(dot == doctest::Approx(q).epsilon(1e-12));
    CHECK(test::max_diff(tensor_from_vec(v), d) == 0.0);
  }
}

TEST_CASE("noiseless signal") {
  const Vec6 x = design_vector({1, 0, 0});
  CHECK(noiseless_signal(SymMatrix::identity(3), design_vector({0.6, 0.8, 0}), 10) == doctest::Approx(10 * std::exp(-1.0)));
  CHECK(noiseless_signal(SymMatrix::diagonal({16, 0.25, 0.25}), x, 10) == doctest::Approx(1.125e-6).epsilon(1e-3));
  CHECK(noiseless_signal(SymMatrix::diagonal({0.25, 16, 0.25}), x, 10) == doctest::Approx(7.788).epsilon(1e-4));

  const TensorField f = build_phantom();
  const GradientScheme g = default_scheme(2);
  const DwiVolume v = noiseless_dwi(f, g, 10.0);
  CHECK(v.measurements == 18);
  CHECK(v.signals.size() == 18 * f.values.size());
  const std::size_t idx = f.grid.index(27, 50, 0);
  for (std::size_t m = 0; m < 18; ++m)
    CHECK(v.voxel(idx)[m] == doctest::Approx(noiseless_signal(f.values[idx], g.design(m), 10.0)));
}

TEST_CASE("Rician samples") {
  RandomStream z({31}, 0, 0);
  CHECK(rician_sample(7.788, 0.0, z) == 7.788);

  const int n = 1000000;
  {
    RandomStream rng({31}, 1, 0);
    std::vector<double> sq(n);
    for (auto& s : sq) s = std::pow(rician_sample(7.788, 0.5, rng), 2);
    const auto m = test::moments(sq);
    CHECK(std::abs(m.mean - (7.788 * 7.788 + 2 * 0.25)) < 3 * m.se);
    CHECK(7.788 * 7.788 + 2 * 0.25 == doctest::Approx(61.153).epsilon(1e-4));
  }
  {
    RandomStream rng({31}, 2, 0);
    std::vector<double> s(n);
    for (auto& x : s) x = rician_sample(0.0, 2.0, rng);
    const auto m = test::moments(s);
    CHECK(std::abs(m.mean - 2.0 * std::sqrt(std::numbers::pi / 2)) < 3 * m.se);
  }
  {
    // Distribution check against the Rician CDF.
    RandomStream rng({31}, 3, 0);
    std::vector<double> s(20000);
    for (auto& x : s) x = rician_sample(1.5, 1.0, rng);
    const double d = test::ks_statistic(s, [](double x) { return rician_cdf({1.5, 1.0}, x); });
    CHECK(test::ks_pvalue(d, s.size()) > 0.01);
  }
}

TEST_CASE("Rician corruption is reproducible and schedule independent") {
  PhantomConfig cfg = default_phantom_config();
  const TensorField f = build_phantom(cfg);
  const GradientScheme g = default_scheme(2);
  const DwiVolume clean = noiseless_dwi(f, g, 10.0);
  const DwiVolume a = rician_corrupt(clean, 0.5, {5}, Execution::parallel);
  const DwiVolume b = rician_corrupt(clean, 0.5, {5}, Execution::serial);
  const DwiVolume c = rician_corrupt(clean, 0.5, {6}, Execution::parallel);
  CHECK(a.signals == b.signals);
  CHECK(a.signals != c.signals);
  for (double s : a.signals) CHECK(s >= 0.0);
  // The stream of (voxel, measurement) is fixed by the seed alone.
  RandomStream rng({5}, 100, 7);
  CHECK(a.voxel(100)[7] == rician_sample(clean.voxel(100)[7], 0.5, rng));
}

TEST_CASE("spectral noise") {
  const SpdTensor d = SpdTensor::diagonal({16, 0.25, 0.25});
  {
    RandomStream rng({32}, 0, 0);
    const auto r = spectral_corrupt(d, {1000000, 0.0}, rng);
    CHECK(test::max_diff(r.tensor, d) < 0.05);
  }
  {
    // Eta = 0: the (1,1) entry is 16 chi2(20)/20.
    const int n = 100000;
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) {
      RandomStream rng({33}, static_cast<std::uint64_t>(i), 0);
      v[i] = spectral_corrupt(d, {20, 0.0}, rng).tensor(0, 0);
    }
    const auto m = test::moments(v);
    CHECK(std::abs(m.mean - 16.0) < 3 * m.se);
    CHECK(m.se == doctest::Approx(std::sqrt(2 * 256.0 / 20 / n)).epsilon(0.05));
  }
  {
    // The rotation is orthogonal: eigenvalues are exactly lambda_j U_j,
    // replayed from the same stream.
    RandomStream rng0({34}, 0, 0);
    for (int trial = 0; trial < 200; ++trial) {
      const SpdTensor base = test::random_spd(rng0);
      const auto be = sym_eig(base);
      RandomStream rng({34}, 1, static_cast<std::uint64_t>(trial));
      RandomStream replay({34}, 1, static_cast<std::uint64_t>(trial));
      const auto r = spectral_corrupt(base, {20, 0.3}, rng);
      std::vector<double> want;
      for (int j = 0; j < 3; ++j) want.push_back(be.values[j] * replay.chi_square(20) / 20.0);
      std::sort(want.rbegin(), want.rend());
      const auto re = sym_eig(r.tensor);
      for (int j = 0; j < 3; ++j) CHECK(re.values[j] == doctest::Approx(want[j]).epsilon(1e-10));
    }
  }
  CHECK_THROWS(spectral_corrupt(build_phantom(), {0, 0.1}, RngSpec{1}));

  const TensorField f = build_phantom();
  const auto a = spectral_corrupt(f, {20, 0.3}, {7}, Execution::parallel);
  const auto b = spectral_corrupt(f, {20, 0.3}, {7}, Execution::serial);
  bool same = true;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    for (int p = 0; p < 6; ++p) same = same && a.field.values[i].matrix().packed()[p] == b.field.values[i].matrix().packed()[p];
  CHECK(same);
  CHECK(a.redraws == b.redraws);
}
