#pragma once

// Plain-text CSV formats for fields, masks, signals and reports. Every file
// starts with a comment line carrying the config hash and master seed;
// numbers are written with 17 significant digits so they round-trip.

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "tensmooth/analysis.hpp"
#include "tensmooth/noise.hpp"
#include "tensmooth/perturbation.hpp"
#include "tensmooth/phantom.hpp"
#include "tensmooth/regression.hpp"
#include "tensmooth/smoothing.hpp"
#include "tensmooth/verification.hpp"

namespace tensmooth {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text);

struct FileHeader {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

/// "# tensmooth config_hash=<16 hex digits> seed=<n>"
std::string header_line(const FileHeader& h);

/// %.17g
std::string fmt(double x);

class CsvWriter {
 public:
  /// Throws std::runtime_error when the file cannot be opened.
  CsvWriter(const std::string& path, const FileHeader& h, std::string_view columns);

  template <class... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

  /// Flushes and throws if any write failed.
  void close();

 private:
  template <class T>
  static std::string cell(const T& v) {
    if constexpr (std::is_same_v<T, bool>) return v ? "1" : "0";
    else if constexpr (std::is_floating_point_v<T>) return fmt(v);
    else if constexpr (std::is_arithmetic_v<T>) return std::to_string(v);
    else return std::string(v);
  }

  std::string path_;
  std::ofstream out_;
};

/// Data rows of a CSV file: comment lines are skipped and the column header
/// is checked against `columns`.
std::vector<std::vector<std::string>> read_csv(const std::string& path, std::string_view columns);

void write_field(const std::string& path, const SymField& f, const FileHeader& h);
void write_field(const std::string& path, const TensorField& f, const FileHeader& h);
/// Dimensions are inferred from the largest indices; spacing is supplied.
SymField read_sym_field(const std::string& path, const std::array<double, 3>& spacing);
TensorField read_field(const std::string& path, const std::array<double, 3>& spacing);

void write_mask(const std::string& path, const RegionMask& m, const FileHeader& h);

void write_scheme(const std::string& path, const GradientScheme& g, const FileHeader& h);
GradientScheme read_scheme(const std::string& path, int repeats);

void write_dwi(const std::string& path, const DwiVolume& v, const GradientScheme& g, const FileHeader& h);
DwiVolume read_dwi(const std::string& path, const GradientScheme& g, const std::array<double, 3>& spacing, double s0);

void write_diagnostics(const std::string& path, const FieldFit& fit, const Grid& grid, const FileHeader& h);

struct WeightProfileRow {
  double h = 0.0;
  WeightProfile profile;
};
void write_weight_profiles(const std::string& path, const std::vector<WeightProfileRow>& rows, const FileHeader& h);

void write_summary(const std::string& path, const std::vector<SummaryRow>& rows, const FileHeader& h);

void write_verification(const std::string& path, const std::vector<OrderCheckRow>& rows, const FileHeader& h);

void write_checks(const std::string& path, const std::vector<CheckRow>& rows, const FileHeader& h);

}  // namespace tensmooth
