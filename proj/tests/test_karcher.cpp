#include "support.hpp"
#include "tensmooth/karcher.hpp"

using namespace tensmooth;
using test::max_diff;

namespace {

SpdTensor d(double a, double b, double c) { return SpdTensor::diagonal({a, b, c}); }

}  // namespace

TEST_CASE("Euclidean mean") {
  const WeightedEnsemble two({SpdTensor::identity(3), d(3, 1, 1)});
  CHECK(max_diff(mean_euclidean(two.view()), d(2, 1, 1)) < 1e-15);
  const WeightedEnsemble one({d(5, 2, 1)});
  CHECK(max_diff(mean_euclidean(one.view()), d(5, 2, 1)) == 0.0);
  const WeightedEnsemble w({d(4, 1, 1), SpdTensor::identity(3)}, {1.0, 3.0});
  CHECK(max_diff(mean_euclidean(w.view()), d(1.75, 1, 1)) < 1e-15);
}

TEST_CASE("log-Euclidean mean") {
  const double e = std::exp(1.0);
  CHECK(max_diff(mean_log_euclidean(WeightedEnsemble({SpdTensor::identity(3), d(e * e, 1, 1)}).view()), d(e, 1, 1)) <
        1e-14);
  CHECK(max_diff(mean_log_euclidean(WeightedEnsemble({d(3, 2, 1), d(3, 2, 1), d(3, 2, 1)}).view()), d(3, 2, 1)) < 1e-14);
  CHECK(max_diff(mean_log_euclidean(WeightedEnsemble({d(16, 0.25, 0.25), d(0.25, 16, 0.25)}).view()), d(2, 2, 0.25)) <
        1e-14);
}

TEST_CASE("recursive affine mean") {
  CHECK(max_diff(mean_affine_recursive(WeightedEnsemble({SpdTensor::identity(3), d(4, 1, 1)}).view()), d(2, 1, 1)) <
        1e-14);
  CHECK(max_diff(mean_affine_recursive(WeightedEnsemble({d(1, 1, 1), d(8, 1, 1), d(64, 1, 1)}).view()), d(8, 1, 1)) <
        1e-13);
  CHECK(max_diff(mean_affine_recursive(WeightedEnsemble({d(3, 2, 1)}).view()), d(3, 2, 1)) == 0.0);
}

TEST_CASE("recursive step fraction reduces to the Euclidean recursion on commuting scalars") {
  // On multiples of the identity the affine geodesic is geometric
  // interpolation, so the recursion must reproduce the weighted geometric
  // mean for any order and weights.
  RandomStream rng({20}, 0, 0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SpdTensor> ts;
    std::vector<double> ws;
    double log_sum = 0.0, w_sum = 0.0;
    for (int i = 0; i < 7; ++i) {
      const double v = 0.1 + 10.0 * rng.uniform(), w = rng.uniform();
      ts.push_back(d(v, v, v));
      ws.push_back(w);
      log_sum += w * std::log(v);
      w_sum += w;
    }
    const double g = std::exp(log_sum / w_sum);
    CHECK(mean_affine_recursive(WeightedEnsemble(ts, ws).view())(0, 0) == doctest::Approx(g).epsilon(1e-12));
  }
}

TEST_CASE("two-tensor means follow the geodesic and interpolate determinants") {
  RandomStream rng({21}, 0, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const SpdTensor x = test::random_spd(rng), y = test::random_spd(rng);
    const double t = rng.uniform();
    const WeightedEnsemble e({x, y}, {1.0 - t, t});
    const double target = std::pow(x.determinant(), 1.0 - t) * std::pow(y.determinant(), t);
    CHECK(mean_log_euclidean(e.view()).determinant() == doctest::Approx(target).epsilon(1e-9));
    CHECK(mean_affine_recursive(e.view()).determinant() == doctest::Approx(target).epsilon(1e-9));
    CHECK(mean_affine_fixed_point(e.view()).mean.determinant() == doctest::Approx(target).epsilon(1e-9));
    CHECK(mean_euclidean(e.view()).determinant() >= target * (1.0 - 1e-12));
    CHECK(max_diff(mean_affine_recursive(e.view()), affine_geodesic(x, y, t)) < 1e-12);
  }
}

TEST_CASE("fixed-point affine mean") {
  RandomStream rng({22}, 0, 0);
  for (int trial = 0; trial < 20; ++trial) {
    // Closed-form midpoint X^{1/2} (X^{-1/2} Y X^{-1/2})^{1/2} X^{1/2}.
    const SpdTensor x = test::random_spd(rng), y = test::random_spd(rng);
    const SpdTensor xs = mat_sqrt(x), xi = mat_inv_sqrt(x);
    const SpdTensor inner(congruence(xi.matrix().dense(), y));
    const SymMatrix mid = congruence(xs.matrix().dense(), mat_sqrt(inner));
    const auto r = mean_affine_fixed_point(WeightedEnsemble({x, y}).view());
    CHECK(max_diff(r.mean, mid) < 1e-10);
  }

  // Commuting ensembles: equals the log-Euclidean mean.
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix q = test::random_rotation(rng);
    std::vector<SpdTensor> ts;
    std::vector<double> ws;
    for (int i = 0; i < 6; ++i) {
      ts.emplace_back(congruence(q, SymMatrix::diagonal({0.1 + 9 * rng.uniform(), 0.1 + 9 * rng.uniform(), 0.5})));
      ws.push_back(0.1 + rng.uniform());
    }
    const WeightedEnsemble e(ts, ws);
    CHECK(max_diff(mean_affine_fixed_point(e.view()).mean, mean_log_euclidean(e.view())) < 1e-10);
    CHECK(max_diff(mean_affine_recursive(e.view()), mean_log_euclidean(e.view())) < 1e-10);
  }

  const auto single = mean_affine_fixed_point(WeightedEnsemble({d(3, 2, 1)}).view());
  CHECK(single.iterations == 0);
  CHECK(max_diff(single.mean, d(3, 2, 1)) < 1e-15);

  // General ensembles satisfy the barycentric equation.
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SpdTensor> ts;
    for (int i = 0; i < 9; ++i) ts.push_back(test::random_spd(rng, 0.01, 20.0));
    const WeightedEnsemble e(ts);
    const auto r = mean_affine_fixed_point(e.view(), {1e-12, 500});
    CHECK(r.residual < 1e-12);
    CHECK(barycentric_residual(e.view(), r.mean) < 1e-11);
  }
}

TEST_CASE("fixed-point mean minimizes the weighted squared distance") {
  RandomStream rng({23}, 0, 0);
  std::vector<SpdTensor> ts;
  std::vector<double> ws;
  for (int i = 0; i < 5; ++i) {
    ts.push_back(test::random_spd(rng));
    ws.push_back(rng.uniform() + 0.1);
  }
  const WeightedEnsemble e(ts, ws);
  const auto cost = [&](const SpdTensor& m) {
    double c = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) c += ws[i] * std::pow(distance(Metric::affine, m, ts[i]), 2);
    return c;
  };
  const SpdTensor m = mean_affine_fixed_point(e.view(), {1e-12, 500}).mean;
  const double c0 = cost(m);
  for (int k = 0; k < 50; ++k) {
    const SpdTensor p = affine_exp_map(m, test::random_sym(rng, 1e-3));
    CHECK(cost(p) >= c0 - 1e-12);
  }
}

TEST_CASE("weighted_mean dispatches on the metric") {
  const WeightedEnsemble e({SpdTensor::identity(3), d(4, 1, 1)});
  CHECK(weighted_mean(Metric::euclidean, e.view())(0, 0) == doctest::Approx(2.5));
  CHECK(weighted_mean(Metric::log_euclidean, e.view())(0, 0) == doctest::Approx(2.0));
  CHECK(weighted_mean(Metric::affine, e.view())(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("malformed ensembles are rejected") {
  CHECK_THROWS_AS(WeightedEnsemble({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(WeightedEnsemble({d(1, 1, 1)}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(WeightedEnsemble({d(1, 1, 1)}, {-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(WeightedEnsemble({d(1, 1, 1), d(2, 2, 2)}, {0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(WeightedEnsemble({d(1, 1, 1)}, {std::nan("")}), std::invalid_argument);
}
