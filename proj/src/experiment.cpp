#include "tensmooth/experiment.hpp"

#include <cstdio>
#include <stdexcept>

namespace tensmooth {

namespace {

std::string short_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

std::string_view to_string(NoiseModel m) {
  switch (m) {
    case NoiseModel::none: return "none";
    case NoiseModel::rician: return "rician";
    case NoiseModel::spectral: return "spectral";
  }
  return "?";
}

NoiseModel parse_noise_model(std::string_view name) {
  for (NoiseModel m : {NoiseModel::none, NoiseModel::rician, NoiseModel::spectral})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown noise model '" + std::string(name) + "'");
}

std::string SmootherSpec::bandwidth_label() const {
  if (scheme == SchemeKind::isotropic) return short_number(h);
  return short_number(h) + ":" + short_number(h_aniso);
}

std::vector<SmootherSpec> smoother_grid(const std::vector<Metric>& metrics, const std::vector<double>& bandwidths,
                                        const std::vector<std::pair<double, double>>& aniso_pairs) {
  std::vector<SmootherSpec> out;
  for (Metric m : metrics) {
    for (double h : bandwidths) out.push_back({m, SchemeKind::isotropic, h, h});
    for (const auto& [h1, h2] : aniso_pairs) out.push_back({m, SchemeKind::anisotropic, h1, h2});
  }
  return out;
}

NoisyInput make_noisy_input(const ExperimentConfig& cfg, const TensorField& truth, std::uint64_t seed, Execution exec) {
  NoisyInput in;
  switch (cfg.noise) {
    case NoiseModel::none:
      in.raw = to_sym_field(truth);
      in.spd = truth;
      return in;
    case NoiseModel::spectral: {
      auto r = spectral_corrupt(truth, cfg.spectral, RngSpec{seed}, exec);
      in.spectral_redraws = r.redraws;
      in.spd = std::move(r.field);
      in.raw = to_sym_field(in.spd);
      return in;
    }
    case NoiseModel::rician: {
      const GradientScheme g = default_scheme(cfg.repeats);
      in.dwi = rician_corrupt(noiseless_dwi(truth, g, cfg.s0, exec), cfg.sigma, RngSpec{seed}, exec);
      in.fit = fit_field(*in.dwi, g, cfg.fit, cfg.sigma, cfg.fit_options, exec);
      in.raw = in.fit->estimates;
      auto p = project_field(in.raw);
      in.spd = std::move(p.field);
      in.projected = p.projected;
      return in;
    }
  }
  throw std::invalid_argument("unknown noise model");
}

SmoothedOutput apply_smoother(const NoisyInput& in, const SmootherSpec& s, const WeightOptions& w, Execution exec) {
  SmoothingConfig sc;
  sc.metric = s.metric;
  sc.scheme = s.scheme;
  sc.h = s.h;
  sc.h_aniso = s.h_aniso;
  sc.weights = w;
  SmoothedOutput out;
  if (s.metric == Metric::euclidean) {
    const SymSmoothResult r = smooth_field_euclidean(in.raw, sc, exec);
    auto p = project_field(r.field);
    out.field = std::move(p.field);
    out.projected = p.projected;
    out.aniso_fallbacks = r.aniso_fallbacks;
  } else {
    SmoothResult r = smooth_field(in.spd, sc, exec);
    out.field = std::move(r.field);
    out.aniso_fallbacks = r.aniso_fallbacks;
  }
  return out;
}

std::vector<SummaryRow> SeedResult::rows() const {
  std::vector<SummaryRow> out;
  for (const auto& r : unsmoothed) out.push_back({method, "none", "none", "none", r});
  for (const auto& run : smoothed)
    for (const auto& r : run.regions)
      out.push_back({method, std::string(to_string(run.spec.metric)), std::string(to_string(run.spec.scheme)),
                     run.spec.bandwidth_label(), r});
  return out;
}

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, Execution exec) {
  const TensorField truth = build_phantom(cfg.phantom);
  const RegionMask mask = region_masks(cfg.phantom, cfg.regions);
  const NoisyInput in = make_noisy_input(cfg, truth, seed, exec);

  SeedResult res;
  res.seed = seed;
  res.method = cfg.noise == NoiseModel::rician ? std::string(to_string(cfg.fit)) : std::string(to_string(cfg.noise));
  res.projected = in.projected;
  res.spectral_redraws = in.spectral_redraws;
  if (in.fit) {
    res.not_converged = in.fit->not_converged;
    res.not_spd = in.fit->not_spd;
    res.failure_fraction = static_cast<double>(res.not_converged) / static_cast<double>(truth.values.size());
  }
  res.unsmoothed = region_summary(error_field(truth, in.spd, exec), mask);
  for (const SmootherSpec& s : cfg.smoothers) {
    const SmoothedOutput out = apply_smoother(in, s, cfg.weights, exec);
    const auto swollen = swelling_flags(in.spd, out.field, cfg.swelling_margin, cfg.weights.window);
    SmootherRun run;
    run.spec = s;
    run.projected = out.projected;
    run.aniso_fallbacks = out.aniso_fallbacks;
    run.regions = region_summary(error_field(truth, out.field, exec), mask, swollen);
    res.smoothed.push_back(std::move(run));
  }
  return res;
}

}  // namespace tensmooth
