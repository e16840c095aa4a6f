#include "tensmooth/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tensmooth/parallel.hpp"

namespace tensmooth {

std::vector<double> error_field(const TensorField& truth, const TensorField& estimate, Execution exec) {
  if (!(truth.grid == estimate.grid)) throw std::invalid_argument("error_field: grids differ");
  std::vector<double> e(truth.values.size());
  for_each_index(e.size(), exec,
                 [&](std::size_t i) { e[i] = distance(Metric::affine, truth.values[i], estimate.values[i]); });
  return e;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double mad(const std::vector<double>& v) {
  const double m = median(v);
  std::vector<double> dev(v.size());
  std::transform(v.begin(), v.end(), dev.begin(), [m](double x) { return std::abs(x - m); });
  return median(std::move(dev));
}

bool in_summary_region(const std::string& region, Region label) {
  if (region == "whole") return true;
  if (region == "bands") return is_band_region(label);
  if (region == "background") return !is_band_region(label);
  return to_string(label) == region;
}

std::vector<RegionStats> region_summary(std::span<const double> errors, const RegionMask& mask,
                                        std::span<const unsigned char> swollen) {
  if (errors.size() != mask.labels.size()) throw std::invalid_argument("region_summary: mask size mismatch");
  if (!swollen.empty() && swollen.size() != errors.size())
    throw std::invalid_argument("region_summary: swelling flag size mismatch");
  std::vector<RegionStats> rows;
  for (const char* name : kSummaryRegions) {
    RegionStats s;
    s.region = name;
    std::vector<double> vals;
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (!in_summary_region(s.region, mask.labels[i])) continue;
      vals.push_back(errors[i]);
      if (!swollen.empty() && swollen[i]) ++flagged;
    }
    s.count = vals.size();
    s.median = median(vals);
    s.mad = vals.empty() ? std::numeric_limits<double>::quiet_NaN() : mad(vals);
    if (!swollen.empty())
      s.swelling_fraction = vals.empty() ? 0.0 : static_cast<double>(flagged) / static_cast<double>(vals.size());
    rows.push_back(std::move(s));
  }
  return rows;
}

const RegionStats& find_region(const std::vector<RegionStats>& rows, const std::string& region) {
  for (const auto& r : rows)
    if (r.region == region) return r;
  throw std::invalid_argument("no summary row for region '" + region + "'");
}

namespace {

std::vector<double> neighbourhood_max_det(const TensorField& input, std::array<int, 3> window) {
  const Grid& g = input.grid;
  std::vector<double> det(input.values.size());
  for (std::size_t i = 0; i < det.size(); ++i) det[i] = input.values[i].determinant();
  std::vector<double> out(det.size());
  for (std::size_t idx = 0; idx < det.size(); ++idx) {
    const auto c = g.coords(idx);
    double m = 0.0;
    for (int dk = -window[2]; dk <= window[2]; ++dk)
      for (int dj = -window[1]; dj <= window[1]; ++dj)
        for (int di = -window[0]; di <= window[0]; ++di)
          if (g.contains(c[0] + di, c[1] + dj, c[2] + dk)) m = std::max(m, det[g.index(c[0] + di, c[1] + dj, c[2] + dk)]);
    out[idx] = m;
  }
  return out;
}

}  // namespace

std::vector<double> swelling_ratios(const TensorField& input, const TensorField& output, std::array<int, 3> window) {
  if (!(input.grid == output.grid)) throw std::invalid_argument("swelling: grids differ");
  const auto ref = neighbourhood_max_det(input, window);
  std::vector<double> r(ref.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = output.values[i].determinant() / ref[i];
  return r;
}

std::vector<unsigned char> swelling_flags(const TensorField& input, const TensorField& output, double margin,
                                          std::array<int, 3> window) {
  const auto r = swelling_ratios(input, output, window);
  std::vector<unsigned char> f(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) f[i] = r[i] > 1.0 + margin ? 1 : 0;
  return f;
}

std::vector<std::pair<std::string, double>> swelling_fraction(const TensorField& input, const TensorField& output,
                                                              const RegionMask& mask, double margin,
                                                              std::array<int, 3> window) {
  const auto flags = swelling_flags(input, output, margin, window);
  std::vector<std::pair<std::string, double>> out;
  for (const char* name : kSummaryRegions) {
    std::size_t n = 0, k = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
      if (!in_summary_region(name, mask.labels[i])) continue;
      ++n;
      k += flags[i];
    }
    out.emplace_back(name, n ? static_cast<double>(k) / static_cast<double>(n) : 0.0);
  }
  return out;
}

}  // namespace tensmooth
