#pragma once

// Kernel smoothing of tensor fields: Gaussian weights on physical voxel
// coordinates, truncated and renormalized, combined by a weighted mean under
// the chosen metric.

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "tensmooth/field.hpp"
#include "tensmooth/spd.hpp"

namespace tensmooth {

struct WeightOptions {
  /// Raw kernel values (1 at the centre) below this are dropped.
  double threshold = 1e-6;
  /// Candidate neighbours lie within this many voxels of the centre along
  /// each axis.
  std::array<int, 3> window{3, 3, 1};
};

struct NeighborWeight {
  std::size_t index = 0;
  /// Normalized weight.
  double weight = 0.0;
  /// Squared physical distance to the centre.
  double dist2 = 0.0;
};

/// Neighbours sorted by ascending physical distance, ties by linear index.
using WeightMap = std::vector<NeighborWeight>;

/// exp(-|s_i - s|^2 / 2h^2), truncated and renormalized.
WeightMap iso_weights(const Grid& g, std::size_t center, double h, const WeightOptions& opts = {});

/// exp(-tr(D) ds^T D^{-1} ds / 2h^2), truncated and renormalized. When D has
/// condition number above 1e10 the isotropic weights are returned instead
/// and *fell_back is set.
WeightMap aniso_weights(const Grid& g, std::size_t center, const SpdTensor& d, double h,
                        const WeightOptions& opts = {}, bool* fell_back = nullptr);

struct WeightProfile {
  std::size_t size = 0;
  /// Fewest largest weights whose sum reaches 0.99.
  std::size_t n99 = 0;
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  double entropy = 0.0;
};

WeightProfile weight_profile(std::span<const double> weights);
WeightProfile weight_profile(const WeightMap& w);

enum class SchemeKind { isotropic, anisotropic };

std::string_view to_string(SchemeKind s);
SchemeKind parse_scheme(std::string_view name);

struct SmoothingConfig {
  Metric metric = Metric::log_euclidean;
  SchemeKind scheme = SchemeKind::isotropic;
  /// Isotropic bandwidth; first-stage bandwidth of the anisotropic scheme.
  double h = 0.01;
  /// Second-stage bandwidth of the anisotropic scheme.
  double h_aniso = 0.01;
  WeightOptions weights;
};

struct SmoothResult {
  TensorField field;
  /// Voxels whose anisotropic weights fell back to isotropic ones.
  std::size_t aniso_fallbacks = 0;
};

/// Smooths an SPD field. The affine metric uses the recursive geodesic mean
/// over neighbours in WeightMap order.
SmoothResult smooth_field(const TensorField& f, const SmoothingConfig& cfg, Execution exec = Execution::parallel);

struct SymSmoothResult {
  SymField field;
  std::size_t aniso_fallbacks = 0;
};

/// Euclidean smoothing of a field that may hold indefinite tensors. Stage-2
/// anisotropic weights fall back to isotropic ones where the stage-1 tensor
/// is not SPD.
SymSmoothResult smooth_field_euclidean(const SymField& f, const SmoothingConfig& cfg,
                                       Execution exec = Execution::parallel);

}  // namespace tensmooth
