#pragma once

// Error fields and region-wise robust summaries.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tensmooth/field.hpp"
#include "tensmooth/phantom.hpp"

namespace tensmooth {

/// Affine-invariant distance between truth and estimate at every voxel.
std::vector<double> error_field(const TensorField& truth, const TensorField& estimate,
                                Execution exec = Execution::parallel);

double median(std::vector<double> v);
/// Median of |v - median(v)|, no consistency factor.
double mad(const std::vector<double>& v);

/// The five mask labels plus the unions reported in comparison tables.
inline constexpr std::array<const char*, 8> kSummaryRegions{
    "whole",          "bands",           "background",          "bands_crossing",
    "bands_interior", "bands_boundary",  "background_interior", "background_boundary"};

/// Whether a voxel with this label belongs to the named summary region.
bool in_summary_region(const std::string& region, Region label);

struct RegionStats {
  std::string region;
  double median = 0.0;
  double mad = 0.0;
  std::size_t count = 0;
  /// Fraction of voxels flagged as swollen; absent when not evaluated.
  std::optional<double> swelling_fraction;
};

/// One row per entry of kSummaryRegions (empty regions report NaN).
std::vector<RegionStats> region_summary(std::span<const double> errors, const RegionMask& mask,
                                        std::span<const unsigned char> swollen = {});

struct SummaryRow {
  std::string method;
  std::string metric;
  std::string scheme;
  /// Bandwidth, or "none" for unsmoothed rows and "h1:h2" for two-stage
  /// schemes.
  std::string h;
  RegionStats stats;
};

const RegionStats& find_region(const std::vector<RegionStats>& rows, const std::string& region);

/// det(output) > (1 + margin) * max det(input) over the window around the
/// voxel.
std::vector<unsigned char> swelling_flags(const TensorField& input, const TensorField& output, double margin = 0.01,
                                          std::array<int, 3> window = {3, 3, 1});

/// Largest det(output) / max-neighbourhood det(input) over the voxels.
std::vector<double> swelling_ratios(const TensorField& input, const TensorField& output,
                                    std::array<int, 3> window = {3, 3, 1});

/// Fraction of flagged voxels per summary region.
std::vector<std::pair<std::string, double>> swelling_fraction(const TensorField& input, const TensorField& output,
                                                              const RegionMask& mask, double margin = 0.01,
                                                              std::array<int, 3> window = {3, 3, 1});

}  // namespace tensmooth
