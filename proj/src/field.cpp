#include "tensmooth/field.hpp"

#include <stdexcept>
#include <string>

namespace tensmooth {

SymField to_sym_field(const TensorField& f) {
  SymField out;
  out.grid = f.grid;
  out.values.reserve(f.values.size());
  for (const auto& t : f.values) out.values.push_back(t.matrix());
  return out;
}

TensorField to_tensor_field(const SymField& f) {
  TensorField out;
  out.grid = f.grid;
  out.values.reserve(f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (!is_spd(f.values[i])) {
      const auto c = f.grid.coords(i);
      throw std::domain_error("voxel (" + std::to_string(c[0]) + "," + std::to_string(c[1]) + "," +
                              std::to_string(c[2]) + ") is not positive definite");
    }
    out.values.push_back(SpdTensor::unchecked(f.values[i]));
  }
  return out;
}

ProjectionReport project_field(const SymField& f, double floor_scale) {
  ProjectionReport r;
  r.field.grid = f.grid;
  r.field.values.reserve(f.values.size());
  r.was_projected.assign(f.values.size(), 0);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (is_spd(f.values[i])) {
      r.field.values.push_back(SpdTensor::unchecked(f.values[i]));
    } else {
      r.field.values.push_back(project_spd(f.values[i], floor_scale));
      r.was_projected[i] = 1;
      ++r.projected;
    }
  }
  return r;
}

}  // namespace tensmooth
