#include "tensmooth/phantom.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tensmooth {

namespace {

struct Coverage {
  int row = 0;     // horizontal band number, 0 if none
  int column = 0;  // vertical band number, 0 if none
  const Band* row_band = nullptr;
  const Band* column_band = nullptr;
};

Coverage coverage(const PhantomConfig& cfg, int i, int j, int k) {
  Coverage c;
  for (const auto& b : cfg.bands) {
    if (k < b.slice_lo || k > b.slice_hi) continue;
    if (b.orientation == BandOrientation::horizontal && i >= b.lo && i <= b.hi) {
      c.row = b.number;
      c.row_band = &b;
    } else if (b.orientation == BandOrientation::vertical && j >= b.lo && j <= b.hi) {
      c.column = b.number;
      c.column_band = &b;
    }
  }
  return c;
}

}  // namespace

PhantomConfig default_phantom_config(bool vertical_bands_x_oriented) {
  PhantomConfig cfg;
  const Vec3 y16{0.25, 16, 0.25}, y4{0.5, 4, 0.5}, y2{0.7, 2, 0.7};
  const Vec3 x16{16, 0.25, 0.25}, x4{4, 0.5, 0.5}, x2{2, 0.7, 0.7};
  using O = BandOrientation;
  cfg.bands = {
      {O::horizontal, 0, 1, 1, 20, 35, y16},
      {O::horizontal, 0, 1, 2, 60, 75, y4},
      {O::horizontal, 0, 1, 3, 90, 105, y2},
      {O::horizontal, 2, 3, 1, 40, 50, y16},
      {O::horizontal, 2, 3, 2, 80, 90, y4},
      {O::horizontal, 2, 3, 3, 110, 120, y2},
      {O::vertical, 0, 1, 1, 20, 35, x16},
      {O::vertical, 0, 1, 2, 60, 75, x4},
      {O::vertical, 0, 1, 3, 90, 105, x2},
      {O::vertical, 2, 3, 1, 40, 50, vertical_bands_x_oriented ? x16 : y16},
      {O::vertical, 2, 3, 2, 80, 90, vertical_bands_x_oriented ? x4 : y4},
      {O::vertical, 2, 3, 3, 110, 120, vertical_bands_x_oriented ? x2 : y2},
  };
  return cfg;
}

PhantomConfig crossing_toy_config() {
  PhantomConfig cfg;
  cfg.grid.dims = {56, 56, 1};
  cfg.bands = {
      {BandOrientation::horizontal, 0, 0, 1, 20, 35, {0.25, 16, 0.25}},
      {BandOrientation::vertical, 0, 0, 1, 20, 35, {16, 0.25, 0.25}},
  };
  return cfg;
}

std::vector<Band> read_band_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open band table '" + path + "'");
  std::vector<Band> bands;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      if (line.rfind("orientation", 0) == 0) continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9) throw std::runtime_error("band table row needs 9 columns: '" + line + "'");
    Band b;
    if (cells[0] == "horizontal")
      b.orientation = BandOrientation::horizontal;
    else if (cells[0] == "vertical")
      b.orientation = BandOrientation::vertical;
    else
      throw std::runtime_error("unknown band orientation '" + cells[0] + "'");
    b.slice_lo = std::stoi(cells[1]);
    b.slice_hi = std::stoi(cells[2]);
    b.number = std::stoi(cells[3]);
    b.lo = std::stoi(cells[4]);
    b.hi = std::stoi(cells[5]);
    b.diag = {std::stod(cells[6]), std::stod(cells[7]), std::stod(cells[8])};
    if (b.number < 1 || b.number > 127) throw std::runtime_error("band number must be in [1, 127]");
    bands.push_back(b);
  }
  return bands;
}

TensorField build_phantom(const PhantomConfig& cfg) {
  TensorField f(cfg.grid, SpdTensor::identity(3));
  const auto& d = cfg.grid.dims;
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i) {
        const Coverage c = coverage(cfg, i, j, k);
        const Band* b = c.row_band ? c.row_band : c.column_band;
        if (b) f.at(i, j, k) = SpdTensor(SymMatrix::diagonal({b->diag[0], b->diag[1], b->diag[2]}));
      }
  return f;
}

std::string_view to_string(Region r) {
  switch (r) {
    case Region::bands_crossing: return "bands_crossing";
    case Region::background_interior: return "background_interior";
    case Region::bands_interior: return "bands_interior";
    case Region::background_boundary: return "background_boundary";
    case Region::bands_boundary: return "bands_boundary";
  }
  return "?";
}

Region parse_region(std::string_view name) {
  for (Region r : kAllRegions)
    if (to_string(r) == name) return r;
  throw std::invalid_argument("unknown region '" + std::string(name) + "'");
}

bool is_band_region(Region r) {
  return r == Region::bands_crossing || r == Region::bands_interior || r == Region::bands_boundary;
}

RegionMask region_masks(const PhantomConfig& cfg, RegionRules rules) {
  const Grid& g = cfg.grid;
  RegionMask m;
  m.grid = g;
  m.labels.assign(g.size(), Region::background_interior);
  m.row_band.assign(g.size(), 0);
  m.column_band.assign(g.size(), 0);

  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const Coverage c = coverage(cfg, i, j, k);
        const std::size_t idx = g.index(i, j, k);
        m.row_band[idx] = static_cast<signed char>(c.row);
        m.column_band[idx] = static_cast<signed char>(c.column);
      }

  const int reach = rules.interior_distance - 1;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const std::size_t idx = g.index(i, j, k);
        const bool band = m.in_band(idx);
        // Chebyshev distance to the nearest voxel of the other class, capped.
        int nearest = reach + 1;
        for (int dj = -reach; dj <= reach; ++dj)
          for (int di = -reach; di <= reach; ++di) {
            const int ii = i + di, jj = j + dj;
            if (!g.contains(ii, jj, k)) continue;
            if (m.in_band(g.index(ii, jj, k)) != band) nearest = std::min(nearest, std::max(std::abs(di), std::abs(dj)));
          }
        Region label;
        if (band) {
          if (m.row_band[idx] != 0 && m.column_band[idx] != 0)
            label = Region::bands_crossing;
          else if (nearest == 1)
            label = Region::bands_crossing;
          else if (nearest <= reach)
            label = Region::bands_boundary;
          else
            label = Region::bands_interior;
        } else {
          label = nearest <= reach ? Region::background_boundary : Region::background_interior;
        }
        m.labels[idx] = label;
      }
  return m;
}

}  // namespace tensmooth
