#pragma once

// Synthetic band phantom and its evaluation regions.
//
// Bands are specified in table coordinates: a "horizontal" band spans an
// inclusive range of rows, indexed by the first grid coordinate (x); a
// "vertical" band spans an inclusive range of columns, indexed by the second
// grid coordinate (y). Each band applies to an inclusive range of slices (z).
// Where a horizontal and a vertical band cross, the horizontal band's tensor
// wins. Everything else is the identity background.

#include <string>
#include <string_view>
#include <vector>

#include "tensmooth/field.hpp"

namespace tensmooth {

enum class BandOrientation { horizontal, vertical };

struct Band {
  BandOrientation orientation = BandOrientation::horizontal;
  int slice_lo = 0;
  int slice_hi = 0;
  /// 1-based index within its orientation and slice group.
  int number = 1;
  int lo = 0;
  int hi = 0;
  Vec3 diag{1.0, 1.0, 1.0};
};

struct PhantomConfig {
  Grid grid;
  std::vector<Band> bands;
};

/// The 128x128x4 design: three horizontal and three vertical bands per slice
/// pair. With vertical_bands_x_oriented the slice 3-4 vertical bands carry
/// x-oriented tensors instead of the tabulated y-oriented ones.
PhantomConfig default_phantom_config(bool vertical_bands_x_oriented = false);

/// One 56x56 slice holding the crossing of the y-oriented horizontal band
/// and the x-oriented vertical band at rows/columns 20-35. Every tensor has
/// unit determinant.
PhantomConfig crossing_toy_config();

/// Band table CSV: orientation,slice_lo,slice_hi,number,lo,hi,d1,d2,d3 with
/// orientation "horizontal" or "vertical" and 0-based slice indices.
std::vector<Band> read_band_table(const std::string& path);

TensorField build_phantom(const PhantomConfig& cfg = default_phantom_config());

enum class Region : unsigned char {
  bands_crossing,
  background_interior,
  bands_interior,
  background_boundary,
  bands_boundary,
};

inline constexpr std::array<Region, 5> kAllRegions{Region::bands_crossing, Region::background_interior,
                                                   Region::bands_interior, Region::background_boundary,
                                                   Region::bands_boundary};

std::string_view to_string(Region r);
Region parse_region(std::string_view name);
bool is_band_region(Region r);

struct RegionMask {
  Grid grid;
  std::vector<Region> labels;
  /// Horizontal / vertical band number covering the voxel, 0 when none.
  std::vector<signed char> row_band;
  std::vector<signed char> column_band;

  bool in_band(std::size_t idx) const { return row_band[idx] != 0 || column_band[idx] != 0; }
};

struct RegionRules {
  /// In-plane Chebyshev distance (in voxels) separating interior from
  /// boundary: interior voxels are at least this far from the other class.
  int interior_distance = 4;
};

/// Labels every voxel. Band voxels inside two bands, and band voxels adjacent
/// (8-neighbourhood, in-plane) to background, are bands_crossing.
RegionMask region_masks(const PhantomConfig& cfg, RegionRules rules = {});

}  // namespace tensmooth
