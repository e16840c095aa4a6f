#pragma once

#include <cstdint>
#include <vector>

#include "tensmooth/field.hpp"
#include "tensmooth/rng.hpp"

namespace tensmooth {

/// Diffusion design vector x_b = (b1^2, b2^2, b3^2, 2 b1 b2, 2 b1 b3, 2 b2 b3),
/// so that b^T D b = x_b^T vec(D) with vec(D) = (D11, D22, D33, D12, D13, D23).
Vec6 design_vector(const Vec3& b);

/// 3x3 symmetric tensor <-> (D11, D22, D33, D12, D13, D23).
SymMatrix tensor_from_vec(const Vec6& v);
Vec6 tensor_to_vec(const SymMatrix& d);

/// Gradient directions with repeats. Measurement m corresponds to direction
/// m / repeats and repeat m % repeats.
class GradientScheme {
 public:
  /// Directions are normalized; throws if a direction is zero or the design
  /// sum_b x_b x_b^T has condition number >= 1e6.
  GradientScheme(std::vector<Vec3> directions, int repeats);

  const std::vector<Vec3>& directions() const { return directions_; }
  int repeats() const { return repeats_; }
  std::size_t measurements() const { return design_.size(); }
  std::size_t direction_of(std::size_t m) const { return m / static_cast<std::size_t>(repeats_); }
  const Vec6& design(std::size_t m) const { return design_[m]; }
  const std::vector<Vec6>& design() const { return design_; }

  /// sum over measurements of x_b x_b^T.
  Matrix gram() const;

 private:
  std::vector<Vec3> directions_;
  int repeats_;
  std::vector<Vec6> design_;
};

/// The nine acquisition directions of the simulation design, each repeated.
GradientScheme default_scheme(int repeats = 2);

/// Per-voxel, per-measurement signal intensities.
struct DwiVolume {
  Grid grid;
  double s0 = 10.0;
  std::size_t measurements = 0;
  std::vector<double> signals;  // voxel-major

  std::span<const double> voxel(std::size_t v) const { return {signals.data() + v * measurements, measurements}; }
  std::span<double> voxel(std::size_t v) { return {signals.data() + v * measurements, measurements}; }
};

double noiseless_signal(const SymMatrix& d, const Vec6& x, double s0);

DwiVolume noiseless_dwi(const TensorField& f, const GradientScheme& g, double s0, Execution exec = Execution::parallel);

/// ||S u + sigma eps|| with u = (1, 0) and eps standard bivariate normal.
double rician_sample(double clean, double sigma, RandomStream& rng);

/// Stream for voxel v, measurement m is RandomStream(spec, v, m).
DwiVolume rician_corrupt(const DwiVolume& v, double sigma, RngSpec rng, Execution exec = Execution::parallel);

struct SpectralNoise {
  int nu = 20;
  double eta = 0.1;
};

struct SpectralDraw {
  SpdTensor tensor;
  /// Number of rotation factors redrawn because I + eta Z was numerically
  /// singular.
  int redraws = 0;
};

/// E diag(lambda_j U_j) E^T rotated by the polar factor of I + eta Z, with
/// U_j ~ chi2(nu)/nu.
SpectralDraw spectral_corrupt(const SpdTensor& d, SpectralNoise params, RandomStream& rng);

struct SpectralFieldResult {
  TensorField field;
  std::size_t redraws = 0;
};

/// Stream for voxel v is RandomStream(spec, v, 0).
SpectralFieldResult spectral_corrupt(const TensorField& f, SpectralNoise params, RngSpec rng,
                                     Execution exec = Execution::parallel);

}  // namespace tensmooth
