#include "tensmooth/io.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace tensmooth {

namespace {

constexpr std::string_view kFieldColumns = "x,y,z,dxx,dyy,dzz,dxy,dxz,dyz";

double to_double(const std::string& s, const std::string& path) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": not a number: '" + s + "'");
  }
}

int to_int(const std::string& s, const std::string& path) {
  const double v = to_double(s, path);
  if (v != static_cast<int>(v)) throw std::runtime_error(path + ": not an integer: '" + s + "'");
  return static_cast<int>(v);
}

void write_row(CsvWriter& w, const Grid& g, std::size_t idx, const SymMatrix& d) {
  const auto c = g.coords(idx);
  w.row(c[0], c[1], c[2], d(0, 0), d(1, 1), d(2, 2), d(0, 1), d(0, 2), d(1, 2));
}

Grid grid_from_rows(const std::vector<std::vector<std::string>>& rows, const std::array<double, 3>& spacing,
                    const std::string& path) {
  Grid g;
  g.spacing = spacing;
  g.dims = {0, 0, 0};
  for (const auto& r : rows)
    for (int a = 0; a < 3; ++a) g.dims[static_cast<std::size_t>(a)] = std::max(g.dims[static_cast<std::size_t>(a)], to_int(r[static_cast<std::size_t>(a)], path) + 1);
  return g;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string header_line(const FileHeader& h) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "# tensmooth config_hash=%016llx seed=%llu",
                static_cast<unsigned long long>(h.config_hash), static_cast<unsigned long long>(h.seed));
  return buf;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const FileHeader& h, std::string_view columns)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
  out_ << header_line(h) << '\n' << columns << '\n';
}

void CsvWriter::close() {
  out_.flush();
  if (!out_) throw std::runtime_error("write to '" + path_ + "' failed");
  out_.close();
}

std::vector<std::vector<std::string>> read_csv(const std::string& path, std::string_view columns) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool seen_header = false;
  std::size_t width = static_cast<std::size_t>(std::count(columns.begin(), columns.end(), ',')) + 1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!seen_header) {
      if (line != columns)
        throw std::runtime_error(path + ": expected columns '" + std::string(columns) + "', got '" + line + "'");
      seen_header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != width) throw std::runtime_error(path + ": wrong number of cells in '" + line + "'");
    rows.push_back(std::move(cells));
  }
  if (!seen_header) throw std::runtime_error(path + ": missing column header");
  return rows;
}

void write_field(const std::string& path, const SymField& f, const FileHeader& h) {
  CsvWriter w(path, h, kFieldColumns);
  for (std::size_t i = 0; i < f.values.size(); ++i) write_row(w, f.grid, i, f.values[i]);
  w.close();
}

void write_field(const std::string& path, const TensorField& f, const FileHeader& h) {
  CsvWriter w(path, h, kFieldColumns);
  for (std::size_t i = 0; i < f.values.size(); ++i) write_row(w, f.grid, i, f.values[i].matrix());
  w.close();
}

SymField read_sym_field(const std::string& path, const std::array<double, 3>& spacing) {
  const auto rows = read_csv(path, kFieldColumns);
  if (rows.empty()) throw std::runtime_error(path + ": no voxels");
  SymField f;
  f.grid = grid_from_rows(rows, spacing, path);
  if (rows.size() != f.grid.size()) throw std::runtime_error(path + ": voxel rows do not cover the grid");
  f.values.assign(f.grid.size(), SymMatrix(3));
  std::vector<unsigned char> seen(f.grid.size(), 0);
  for (const auto& r : rows) {
    const std::size_t idx = f.grid.index(to_int(r[0], path), to_int(r[1], path), to_int(r[2], path));
    if (seen[idx]++) throw std::runtime_error(path + ": duplicate voxel row");
    SymMatrix d(3);
    d.set(0, 0, to_double(r[3], path));
    d.set(1, 1, to_double(r[4], path));
    d.set(2, 2, to_double(r[5], path));
    d.set(0, 1, to_double(r[6], path));
    d.set(0, 2, to_double(r[7], path));
    d.set(1, 2, to_double(r[8], path));
    f.values[idx] = d;
  }
  return f;
}

TensorField read_field(const std::string& path, const std::array<double, 3>& spacing) {
  return to_tensor_field(read_sym_field(path, spacing));
}

void write_mask(const std::string& path, const RegionMask& m, const FileHeader& h) {
  CsvWriter w(path, h, "x,y,z,label");
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    const auto c = m.grid.coords(i);
    w.row(c[0], c[1], c[2], to_string(m.labels[i]));
  }
  w.close();
}

void write_scheme(const std::string& path, const GradientScheme& g, const FileHeader& h) {
  CsvWriter w(path, h, "bx,by,bz");
  for (const auto& b : g.directions()) w.row(b[0], b[1], b[2]);
  w.close();
}

GradientScheme read_scheme(const std::string& path, int repeats) {
  std::vector<Vec3> dirs;
  for (const auto& r : read_csv(path, "bx,by,bz")) dirs.push_back({to_double(r[0], path), to_double(r[1], path), to_double(r[2], path)});
  return GradientScheme(std::move(dirs), repeats);
}

void write_dwi(const std::string& path, const DwiVolume& v, const GradientScheme& g, const FileHeader& h) {
  if (v.measurements != g.measurements()) throw std::invalid_argument("write_dwi: scheme does not match volume");
  CsvWriter w(path, h, "x,y,z,dir_index,repeat,signal");
  const auto reps = static_cast<std::size_t>(g.repeats());
  for (std::size_t i = 0; i < v.grid.size(); ++i) {
    const auto c = v.grid.coords(i);
    const auto s = v.voxel(i);
    for (std::size_t m = 0; m < v.measurements; ++m) w.row(c[0], c[1], c[2], m / reps, m % reps, s[m]);
  }
  w.close();
}

DwiVolume read_dwi(const std::string& path, const GradientScheme& g, const std::array<double, 3>& spacing, double s0) {
  const auto rows = read_csv(path, "x,y,z,dir_index,repeat,signal");
  if (rows.empty()) throw std::runtime_error(path + ": no signals");
  DwiVolume v;
  v.grid = grid_from_rows(rows, spacing, path);
  v.s0 = s0;
  v.measurements = g.measurements();
  if (rows.size() != v.grid.size() * v.measurements)
    throw std::runtime_error(path + ": signal rows do not match grid and scheme");
  v.signals.assign(rows.size(), 0.0);
  const int reps = g.repeats();
  const auto ndir = static_cast<int>(g.directions().size());
  for (const auto& r : rows) {
    const int dir = to_int(r[3], path), rep = to_int(r[4], path);
    if (dir < 0 || dir >= ndir || rep < 0 || rep >= reps) throw std::runtime_error(path + ": measurement index out of range");
    const std::size_t idx = v.grid.index(to_int(r[0], path), to_int(r[1], path), to_int(r[2], path));
    v.voxel(idx)[static_cast<std::size_t>(dir * reps + rep)] = to_double(r[5], path);
  }
  return v;
}

void write_diagnostics(const std::string& path, const FieldFit& fit, const Grid& grid, const FileHeader& h) {
  CsvWriter w(path, h, "x,y,z,method,converged,iterations,residual,spd,clamped_signals");
  const std::string method(to_string(fit.method));
  for (std::size_t i = 0; i < fit.diagnostics.size(); ++i) {
    const auto c = grid.coords(i);
    const auto& d = fit.diagnostics[i];
    w.row(c[0], c[1], c[2], method, d.converged, d.iterations, d.residual, d.spd, d.clamped);
  }
  w.close();
}

void write_weight_profiles(const std::string& path, const std::vector<WeightProfileRow>& rows, const FileHeader& h) {
  CsvWriter w(path, h, "h,size,n99,min,median,max,entropy");
  for (const auto& r : rows)
    w.row(r.h, r.profile.size, r.profile.n99, r.profile.min, r.profile.median, r.profile.max, r.profile.entropy);
  w.close();
}

void write_summary(const std::string& path, const std::vector<SummaryRow>& rows, const FileHeader& h) {
  CsvWriter w(path, h, "region,method,metric,scheme,h,median,mad,count,swelling_fraction");
  for (const auto& r : rows) {
    const std::string sw = r.stats.swelling_fraction ? fmt(*r.stats.swelling_fraction) : "";
    w.row(r.stats.region, r.method, r.metric, r.scheme, r.h, r.stats.median, r.stats.mad, r.stats.count, sw);
  }
  w.close();
}

void write_verification(const std::string& path, const std::vector<OrderCheckRow>& rows, const FileHeader& h) {
  CsvWriter w(path, h, "proposition,case,base,style,t,residual,ratio_vs_half_t,pass");
  for (const auto& r : rows) w.row(r.proposition, r.case_label, r.base, r.style, r.t, r.residual, r.ratio, r.pass);
  w.close();
}

void write_checks(const std::string& path, const std::vector<CheckRow>& rows, const FileHeader& h) {
  CsvWriter w(path, h, "suite,check,value,reference,tolerance,pass");
  for (const auto& r : rows) w.row(r.suite, r.check, r.value, r.reference, r.tolerance, r.pass);
  w.close();
}

}  // namespace tensmooth
