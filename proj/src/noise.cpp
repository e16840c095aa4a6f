#include "tensmooth/noise.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tensmooth/parallel.hpp"

namespace tensmooth {

Vec6 design_vector(const Vec3& b) {
  return {b[0] * b[0], b[1] * b[1], b[2] * b[2], 2 * b[0] * b[1], 2 * b[0] * b[2], 2 * b[1] * b[2]};
}

SymMatrix tensor_from_vec(const Vec6& v) {
  SymMatrix m(3);
  m.set(0, 0, v[0]);
  m.set(1, 1, v[1]);
  m.set(2, 2, v[2]);
  m.set(0, 1, v[3]);
  m.set(0, 2, v[4]);
  m.set(1, 2, v[5]);
  return m;
}

Vec6 tensor_to_vec(const SymMatrix& d) {
  if (d.dim() != 3) throw std::invalid_argument("tensor vector form needs a 3x3 tensor");
  return {d(0, 0), d(1, 1), d(2, 2), d(0, 1), d(0, 2), d(1, 2)};
}

GradientScheme::GradientScheme(std::vector<Vec3> directions, int repeats)
    : directions_(std::move(directions)), repeats_(repeats) {
  if (repeats_ < 1) throw std::invalid_argument("gradient scheme repeats must be >= 1");
  if (directions_.empty()) throw std::invalid_argument("gradient scheme needs at least one direction");
  for (auto& b : directions_) {
    const double norm = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw std::invalid_argument("gradient direction must be nonzero");
    // Leave unit vectors alone so a scheme survives a file round trip.
    if (std::abs(norm - 1.0) > 8 * std::numeric_limits<double>::epsilon())
      for (double& c : b) c /= norm;
  }
  for (const auto& b : directions_)
    for (int r = 0; r < repeats_; ++r) design_.push_back(design_vector(b));
  const Matrix gm = gram();
  const double cond = condition_number(SymMatrix(gm));
  if (!(cond < 1e6))
    throw std::invalid_argument("gradient scheme design is ill-conditioned (condition number " + std::to_string(cond) +
                                ")");
}

Matrix GradientScheme::gram() const {
  Matrix m(6);
  for (const auto& x : design_)
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) m(i, j) += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(j)];
  return m;
}

GradientScheme default_scheme(int repeats) {
  return GradientScheme({{1, 0, 1}, {1, 1, 0}, {0, 1, 1}, {0.3, 0.2, 0.1}, {0.9, 0.45, 0.2}, {1, 0, 0}, {0, 1, 0},
                         {0, 0, 1}, {2, 1, 1.3}},
                        repeats);
}

double noiseless_signal(const SymMatrix& d, const Vec6& x, double s0) {
  const double q = x[0] * d(0, 0) + x[1] * d(1, 1) + x[2] * d(2, 2) + x[3] * d(0, 1) + x[4] * d(0, 2) + x[5] * d(1, 2);
  return s0 * std::exp(-q);
}

DwiVolume noiseless_dwi(const TensorField& f, const GradientScheme& g, double s0, Execution exec) {
  if (!(s0 > 0.0)) throw std::invalid_argument("baseline signal s0 must be positive");
  DwiVolume v;
  v.grid = f.grid;
  v.s0 = s0;
  v.measurements = g.measurements();
  v.signals.assign(f.values.size() * v.measurements, 0.0);
  for_each_index(f.values.size(), exec, [&](std::size_t idx) {
    auto out = v.voxel(idx);
    for (std::size_t m = 0; m < v.measurements; ++m) out[m] = noiseless_signal(f.values[idx], g.design(m), s0);
  });
  return v;
}

double rician_sample(double clean, double sigma, RandomStream& rng) {
  const double re = clean + sigma * rng.normal();
  const double im = sigma * rng.normal();
  return std::hypot(re, im);
}

DwiVolume rician_corrupt(const DwiVolume& v, double sigma, RngSpec spec, Execution exec) {
  if (!(sigma > 0.0)) throw std::invalid_argument("Rician sigma must be positive");
  DwiVolume out = v;
  const std::size_t voxels = v.grid.size();
  for_each_index(voxels, exec, [&](std::size_t idx) {
    auto dst = out.voxel(idx);
    const auto src = v.voxel(idx);
    for (std::size_t m = 0; m < v.measurements; ++m) {
      RandomStream rng(spec, idx, m);
      dst[m] = rician_sample(src[m], sigma, rng);
    }
  });
  return out;
}

SpectralDraw spectral_corrupt(const SpdTensor& d, SpectralNoise params, RandomStream& rng) {
  if (params.nu < 1 || !(params.eta >= 0.0)) throw std::invalid_argument("spectral noise needs nu >= 1 and eta >= 0");
  const int n = d.dim();
  const EigDecomp e = sym_eig(d);
  std::array<double, kMaxDim> scaled{};
  for (int j = 0; j < n; ++j)
    scaled[static_cast<std::size_t>(j)] = e.values[static_cast<std::size_t>(j)] * rng.chi_square(params.nu) / params.nu;
  const SymMatrix core = reconstruct(e, {scaled.data(), static_cast<std::size_t>(n)});

  SpectralDraw out;
  for (;;) {
    Matrix a = Matrix::identity(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) += params.eta * rng.normal();
    const SymMatrix gram(a.transpose() * a);
    const EigDecomp ge = sym_eig(gram);
    if (!(ge.min_value() > 0.0) || ge.max_value() / ge.min_value() > 1e12) {
      ++out.redraws;
      continue;
    }
    const Matrix polar = a * spectral_map(ge, [](double l) { return 1.0 / std::sqrt(l); }).dense();
    out.tensor = SpdTensor::unchecked(congruence(polar, core));
    return out;
  }
}

SpectralFieldResult spectral_corrupt(const TensorField& f, SpectralNoise params, RngSpec spec, Execution exec) {
  SpectralFieldResult r;
  r.field = f;
  std::vector<int> redraws(f.values.size(), 0);
  for_each_index(f.values.size(), exec, [&](std::size_t idx) {
    RandomStream rng(spec, idx, 0);
    SpectralDraw draw = spectral_corrupt(f.values[idx], params, rng);
    r.field.values[idx] = draw.tensor;
    redraws[idx] = draw.redraws;
  });
  for (int c : redraws) r.redraws += static_cast<std::size_t>(c);
  return r;
}

}  // namespace tensmooth
