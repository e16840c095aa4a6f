#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "tensmooth/spd.hpp"

namespace tensmooth {

/// Voxel grid geometry. Voxel (i, j, k) sits at (i*dx, j*dy, k*dz); linear
/// index is x-fastest.
struct Grid {
  std::array<int, 3> dims{128, 128, 4};
  std::array<double, 3> spacing{0.01875, 0.01875, 0.05};

  std::size_t size() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(dims[2]);
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
  }
  std::array<int, 3> coords(std::size_t idx) const {
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny), static_cast<int>(idx / (nx * ny))};
  }
  Vec3 position(int i, int j, int k) const { return {i * spacing[0], j * spacing[1], k * spacing[2]}; }
  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  bool operator==(const Grid&) const = default;
};

template <class T>
struct Field {
  Grid grid;
  std::vector<T> values;

  Field() = default;
  Field(Grid g, T fill) : grid(g), values(g.size(), fill) {}
  Field(Grid g, std::vector<T> v) : grid(g), values(std::move(v)) {}

  const T& at(int i, int j, int k) const { return values[grid.index(i, j, k)]; }
  T& at(int i, int j, int k) { return values[grid.index(i, j, k)]; }
};

/// Every voxel SPD.
using TensorField = Field<SpdTensor>;
/// Symmetric voxels that may be indefinite (raw regression output).
using SymField = Field<SymMatrix>;

SymField to_sym_field(const TensorField& f);

/// Validates every voxel; throws std::domain_error naming the first
/// offending voxel.
TensorField to_tensor_field(const SymField& f);

struct ProjectionReport {
  TensorField field;
  std::size_t projected = 0;
  std::vector<unsigned char> was_projected;
};

/// Eigenvalue-floor projection of indefinite voxels (see project_spd).
ProjectionReport project_field(const SymField& f, double floor_scale = 1e-6);

/// Serial loops are the reference; parallel loops use OpenMP and must
/// produce identical bits.
enum class Execution { serial, parallel };

}  // namespace tensmooth
