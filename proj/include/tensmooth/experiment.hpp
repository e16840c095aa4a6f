#pragma once

// One realization of the simulation pipeline: phantom, noise, optional
// regression, a grid of smoothers and region-wise error summaries.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tensmooth/analysis.hpp"
#include "tensmooth/noise.hpp"
#include "tensmooth/phantom.hpp"
#include "tensmooth/regression.hpp"
#include "tensmooth/smoothing.hpp"

namespace tensmooth {

enum class NoiseModel { none, rician, spectral };

std::string_view to_string(NoiseModel m);
NoiseModel parse_noise_model(std::string_view name);

struct SmootherSpec {
  Metric metric = Metric::log_euclidean;
  SchemeKind scheme = SchemeKind::isotropic;
  double h = 0.01;
  /// Second-stage bandwidth; used by the anisotropic scheme only.
  double h_aniso = 0.01;

  /// "0.01" or "0.005:0.01".
  std::string bandwidth_label() const;
};

struct ExperimentConfig {
  PhantomConfig phantom = default_phantom_config();
  RegionRules regions;
  NoiseModel noise = NoiseModel::rician;
  double sigma = 0.1;
  int repeats = 2;
  double s0 = 10.0;
  SpectralNoise spectral;
  FitMethod fit = FitMethod::nonlinear;
  FitOptions fit_options;
  /// Largest tolerated fraction of non-converged voxel fits.
  double max_failure_fraction = 0.01;
  std::vector<SmootherSpec> smoothers;
  WeightOptions weights;
  double swelling_margin = 0.01;
};

/// metrics x isotropic bandwidths plus metrics x anisotropic pairs.
std::vector<SmootherSpec> smoother_grid(const std::vector<Metric>& metrics, const std::vector<double>& bandwidths,
                                        const std::vector<std::pair<double, double>>& aniso_pairs);

struct NoisyInput {
  /// Raw noisy tensors; regression output may be indefinite.
  SymField raw;
  /// raw with indefinite voxels projected onto the SPD cone.
  TensorField spd;
  std::size_t projected = 0;
  std::optional<FieldFit> fit;
  /// Rician signals when the noise model is rician.
  std::optional<DwiVolume> dwi;
  std::size_t spectral_redraws = 0;
};

/// Noise streams are keyed by `seed`.
NoisyInput make_noisy_input(const ExperimentConfig& cfg, const TensorField& truth, std::uint64_t seed,
                            Execution exec = Execution::parallel);

struct SmoothedOutput {
  TensorField field;
  /// Output voxels projected onto the SPD cone (Euclidean smoothing of an
  /// indefinite input).
  std::size_t projected = 0;
  std::size_t aniso_fallbacks = 0;
};

/// Euclidean smoothing runs on the raw field; the geometric metrics need the
/// projected one.
SmoothedOutput apply_smoother(const NoisyInput& in, const SmootherSpec& s, const WeightOptions& w,
                              Execution exec = Execution::parallel);

struct SmootherRun {
  SmootherSpec spec;
  std::size_t projected = 0;
  std::size_t aniso_fallbacks = 0;
  std::vector<RegionStats> regions;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::string method;
  std::vector<RegionStats> unsmoothed;
  std::vector<SmootherRun> smoothed;
  std::size_t not_converged = 0;
  std::size_t not_spd = 0;
  std::size_t projected = 0;
  std::size_t spectral_redraws = 0;
  double failure_fraction = 0.0;

  /// Flat rows: the unsmoothed summary first, then one block per smoother.
  std::vector<SummaryRow> rows() const;
};

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, Execution exec = Execution::parallel);

}  // namespace tensmooth
