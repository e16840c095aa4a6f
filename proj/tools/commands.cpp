#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "settings.hpp"
#include "tensmooth/io.hpp"
#include "tensmooth/parallel.hpp"

namespace tensmooth::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Context {
  Settings s;
  ExperimentConfig cfg;
  FileHeader header;
  fs::path out;

  std::string path(const std::string& name) const { return (out / name).string(); }
};

void announce(const std::string& path) { std::cout << "wrote " << path << '\n'; }

std::uint64_t master_seed(const Settings& s) { return parse_seeds(s).front(); }

std::size_t center_voxel(const Context& c) {
  const auto v = parse_voxel(c.s);
  if (!c.cfg.phantom.grid.contains(v[0], v[1], v[2])) throw UsageError("weights.voxel: outside the grid");
  return c.cfg.phantom.grid.index(v[0], v[1], v[2]);
}

std::vector<WeightProfileRow> weight_rows(const Context& c, std::size_t center) {
  std::vector<WeightProfileRow> rows;
  for (double h : parse_reals(c.s.bandwidths, "smoothing.bandwidths"))
    rows.push_back({h, weight_profile(iso_weights(c.cfg.phantom.grid, center, h, c.cfg.weights))});
  return rows;
}

std::string smoother_file(const SmootherSpec& spec) {
  std::string label = spec.bandwidth_label();
  for (char& ch : label)
    if (ch == ':') ch = '-';
  return "smoothed_" + std::string(to_string(spec.metric)) + "_" + std::string(to_string(spec.scheme)) + "_h" + label +
         ".csv";
}

json region_json(const RegionStats& r) {
  json j = {{"region", r.region}, {"median", r.median}, {"mad", r.mad}, {"count", r.count}};
  j["swelling_fraction"] = r.swelling_fraction ? json(*r.swelling_fraction) : json(nullptr);
  return j;
}

json regions_json(const std::vector<RegionStats>& rows) {
  json a = json::array();
  for (const auto& r : rows) a.push_back(region_json(r));
  return a;
}

json seed_json(const SeedResult& r) {
  json j;
  j["seed"] = r.seed;
  j["method"] = r.method;
  j["not_converged"] = r.not_converged;
  j["not_spd"] = r.not_spd;
  j["projected"] = r.projected;
  j["spectral_redraws"] = r.spectral_redraws;
  j["failure_fraction"] = r.failure_fraction;
  j["unsmoothed"] = regions_json(r.unsmoothed);
  json sm = json::array();
  for (const auto& run : r.smoothed) {
    sm.push_back({{"metric", to_string(run.spec.metric)},
                  {"scheme", to_string(run.spec.scheme)},
                  {"h", run.spec.h},
                  {"h_aniso", run.spec.scheme == SchemeKind::anisotropic ? json(run.spec.h_aniso) : json(nullptr)},
                  {"projected", run.projected},
                  {"aniso_fallbacks", run.aniso_fallbacks},
                  {"regions", regions_json(run.regions)}});
  }
  j["smoothers"] = std::move(sm);
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
}

int cmd_phantom(const Context& c) {
  const TensorField f = build_phantom(c.cfg.phantom);
  write_field(c.path("phantom.csv"), f, c.header);
  announce(c.path("phantom.csv"));
  write_mask(c.path("mask.csv"), region_masks(c.cfg.phantom, c.cfg.regions), c.header);
  announce(c.path("mask.csv"));
  return kPass;
}

TensorField input_or_phantom(const Context& c) {
  if (c.s.input_field.empty()) return build_phantom(c.cfg.phantom);
  return read_field(c.s.input_field, c.cfg.phantom.grid.spacing);
}

int cmd_noise(const Context& c) {
  const TensorField truth = input_or_phantom(c);
  const std::uint64_t seed = master_seed(c.s);
  switch (c.cfg.noise) {
    case NoiseModel::rician: {
      const GradientScheme g = default_scheme(c.cfg.repeats);
      const DwiVolume v = rician_corrupt(noiseless_dwi(truth, g, c.cfg.s0), c.cfg.sigma, RngSpec{seed});
      write_scheme(c.path("scheme.csv"), g, c.header);
      announce(c.path("scheme.csv"));
      write_dwi(c.path("dwi.csv"), v, g, c.header);
      announce(c.path("dwi.csv"));
      return kPass;
    }
    case NoiseModel::spectral: {
      const auto r = spectral_corrupt(truth, c.cfg.spectral, RngSpec{seed});
      write_field(c.path("noisy_field.csv"), r.field, c.header);
      announce(c.path("noisy_field.csv"));
      std::cout << "redraws " << r.redraws << '\n';
      return kPass;
    }
    case NoiseModel::none:
      write_field(c.path("noisy_field.csv"), truth, c.header);
      announce(c.path("noisy_field.csv"));
      return kPass;
  }
  return kUsageError;
}

int cmd_fit(const Context& c) {
  const std::string scheme_path = c.s.input_scheme.empty() ? c.path("scheme.csv") : c.s.input_scheme;
  const std::string dwi_path = c.s.input_dwi.empty() ? c.path("dwi.csv") : c.s.input_dwi;
  const GradientScheme g = read_scheme(scheme_path, c.cfg.repeats);
  const DwiVolume v = read_dwi(dwi_path, g, c.cfg.phantom.grid.spacing, c.cfg.s0);
  const FieldFit fit = fit_field(v, g, c.cfg.fit, c.cfg.sigma, c.cfg.fit_options);
  write_field(c.path("fit.csv"), fit.estimates, c.header);
  announce(c.path("fit.csv"));
  write_diagnostics(c.path("diagnostics.csv"), fit, v.grid, c.header);
  announce(c.path("diagnostics.csv"));
  if (c.cfg.fit_options.project) {
    write_field(c.path("fit_projected.csv"), project_field(fit.estimates).field, c.header);
    announce(c.path("fit_projected.csv"));
  }
  const double frac = static_cast<double>(fit.not_converged) / static_cast<double>(v.grid.size());
  std::cout << "not_converged " << fit.not_converged << " not_spd " << fit.not_spd << '\n';
  if (frac > c.cfg.max_failure_fraction) {
    std::cerr << "failure fraction " << frac << " exceeds " << c.cfg.max_failure_fraction << '\n';
    return kCriterionFailure;
  }
  return kPass;
}

int cmd_smooth(const Context& c) {
  if (c.s.input_field.empty()) throw UsageError("smooth: --input.field is required");
  if (c.cfg.smoothers.empty()) throw UsageError("smooth: no smoothers configured");
  NoisyInput in;
  in.raw = read_sym_field(c.s.input_field, c.cfg.phantom.grid.spacing);
  auto p = project_field(in.raw);
  in.spd = std::move(p.field);
  in.projected = p.projected;

  std::optional<TensorField> truth;
  RegionMask mask;
  if (!c.s.input_truth.empty()) {
    truth = read_field(c.s.input_truth, c.cfg.phantom.grid.spacing);
    if (!(truth->grid == in.raw.grid)) throw UsageError("smooth: truth and input grids differ");
    PhantomConfig pc = c.cfg.phantom;
    pc.grid = in.raw.grid;
    mask = region_masks(pc, c.cfg.regions);
  }
  std::vector<SummaryRow> rows;
  if (truth)
    for (const auto& r : region_summary(error_field(*truth, in.spd), mask)) rows.push_back({"input", "none", "none", "none", r});
  for (const SmootherSpec& spec : c.cfg.smoothers) {
    const SmoothedOutput out = apply_smoother(in, spec, c.cfg.weights);
    write_field(c.path(smoother_file(spec)), out.field, c.header);
    announce(c.path(smoother_file(spec)));
    if (truth) {
      const auto swollen = swelling_flags(in.spd, out.field, c.cfg.swelling_margin, c.cfg.weights.window);
      for (const auto& r : region_summary(error_field(*truth, out.field), mask, swollen))
        rows.push_back({"input", std::string(to_string(spec.metric)), std::string(to_string(spec.scheme)),
                        spec.bandwidth_label(), r});
    }
  }
  if (truth) {
    write_summary(c.path("summary.csv"), rows, c.header);
    announce(c.path("summary.csv"));
  }
  return kPass;
}

int cmd_run(const Context& c) {
  const auto seeds = parse_seeds(c.s);
  const std::size_t center = center_voxel(c);
  json report;
  report["config"] = config_echo(c.s);
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(c.header.config_hash));
  report["config_hash"] = hash;
  report["seeds"] = seeds;
  report["notes"] = {"errors are affine-invariant distances to the noiseless phantom",
                     "the bands summary region includes bands_crossing voxels",
                     "mad is the median absolute deviation without a consistency factor"};
  report["results"] = json::array();

  CsvWriter plot(c.path("plot_data.csv"), c.header, "seed,region,series,metric,scheme,h,h_aniso,median,mad");
  int code = kPass;
  for (std::uint64_t seed : seeds) {
    const SeedResult r = run_seed(c.cfg, seed);
    const std::string summary = c.path("summary_seed" + std::to_string(seed) + ".csv");
    write_summary(summary, r.rows(), c.header);
    announce(summary);
    for (const auto& st : r.unsmoothed) plot.row(seed, st.region, "unsmoothed", "none", "none", "", "", st.median, st.mad);
    for (const auto& run : r.smoothed) {
      const std::string series = std::string(to_string(run.spec.metric)) + "_" + std::string(to_string(run.spec.scheme));
      const std::string h_aniso = run.spec.scheme == SchemeKind::anisotropic ? fmt(run.spec.h_aniso) : "";
      for (const auto& st : run.regions)
        plot.row(seed, st.region, series, to_string(run.spec.metric), to_string(run.spec.scheme), run.spec.h, h_aniso,
                 st.median, st.mad);
    }
    report["results"].push_back(seed_json(r));
    std::cout << "seed " << seed << ": whole-set median " << fmt(find_region(r.unsmoothed, "whole").median)
              << " unsmoothed, " << r.smoothed.size() << " smoothers\n";
    if (r.failure_fraction > c.cfg.max_failure_fraction) {
      std::cerr << "seed " << seed << ": failure fraction " << r.failure_fraction << " exceeds "
                << c.cfg.max_failure_fraction << '\n';
      code = kCriterionFailure;
    }
  }
  plot.close();
  announce(c.path("plot_data.csv"));
  write_weight_profiles(c.path("weights.csv"), weight_rows(c, center), c.header);
  announce(c.path("weights.csv"));
  write_text(c.path("report.json"), report.dump(2) + "\n");
  announce(c.path("report.json"));
  return code;
}

int cmd_verify(const Context& c) {
  const std::uint64_t seed = master_seed(c.s);
  std::vector<CheckRow> checks;
  std::vector<OrderCheckRow> orders;
  const auto append = [&checks](std::vector<CheckRow> rows) { checks.insert(checks.end(), rows.begin(), rows.end()); };
  const auto suites = parse_list(c.s.suites);
  if (suites.empty()) throw UsageError("verify.suites: empty list");
  for (const auto& name : suites) {
    if (name != "perturbation" && name != "regression" && name != "mle" && name != "signal_bias" && name != "bessel")
      throw UsageError("verify.suites: unknown suite '" + name + "'");
  }
  for (const auto& name : suites) {
    std::cout << "suite " << name << std::endl;
    if (name == "perturbation") {
      PerturbationSuiteOptions o;
      o.seed = seed;
      auto r = perturbation_suite(o);
      orders = std::move(r.orders);
      append(std::move(r.checks));
    } else if (name == "regression") {
      RegressionSuiteOptions o;
      o.seed = seed;
      o.variance_replicates = c.s.variance_replicates;
      o.bias_replicates = c.s.bias_replicates;
      o.ordering_tensors = c.s.ordering_tensors;
      o.s0 = c.cfg.s0;
      append(regression_suite(o));
    } else if (name == "mle") {
      MleSuiteOptions o;
      o.seed = seed;
      o.replicates = c.s.mle_replicates;
      o.s0 = c.cfg.s0;
      append(mle_suite(o));
    } else if (name == "signal_bias") {
      SignalBiasSuiteOptions o;
      o.seed = seed;
      o.draws = c.s.signal_draws;
      append(signal_bias_suite(o));
    } else {
      append(bessel_suite());
    }
  }
  std::size_t failed = 0;
  if (!orders.empty()) {
    write_verification(c.path("verification.csv"), orders, c.header);
    announce(c.path("verification.csv"));
    for (const auto& r : orders)
      if (!r.pass) {
        ++failed;
        std::cout << "FAIL order " << r.proposition << " " << r.base << " " << r.style << " t=" << fmt(r.t)
                  << " ratio " << fmt(r.ratio) << '\n';
      }
  }
  write_checks(c.path("checks.csv"), checks, c.header);
  announce(c.path("checks.csv"));
  for (const auto& r : checks)
    if (!r.pass) {
      ++failed;
      std::cout << "FAIL " << r.suite << " " << r.check << ": " << fmt(r.value) << " vs " << fmt(r.reference) << '\n';
    }
  std::cout << (orders.size() + checks.size() - failed) << "/" << (orders.size() + checks.size()) << " checks passed\n";
  return failed == 0 ? kPass : kCriterionFailure;
}

int cmd_weights(const Context& c) {
  const std::size_t center = center_voxel(c);
  const auto rows = weight_rows(c, center);
  write_weight_profiles(c.path("weights.csv"), rows, c.header);
  announce(c.path("weights.csv"));
  for (const auto& r : rows)
    std::cout << "h=" << r.h << " size " << r.profile.size << " (" << r.profile.n99 << ") entropy "
              << r.profile.entropy << '\n';
  return kPass;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Kernel smoothing of SPD tensor fields", "tensmooth"};
  app.require_subcommand(1);
  Settings s;
  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const Context&);
  };
  const std::vector<Sub> subs{
      {"phantom", "Write the band phantom and its region mask", cmd_phantom},
      {"noise", "Corrupt a field with Rician or spectral noise", cmd_noise},
      {"fit", "Fit tensors to DWI signals", cmd_fit},
      {"smooth", "Smooth a tensor field over the configured grid", cmd_smooth},
      {"run", "Full pipeline per seed with region summaries", cmd_run},
      {"verify", "Numerical verification suites", cmd_verify},
      {"weights", "Isotropic weight profiles at one voxel", cmd_weights},
  };
  std::vector<CLI::App*> apps;
  for (const auto& sub : subs) {
    CLI::App* a = app.add_subcommand(sub.name, sub.help);
    register_options(*a, s);
    apps.push_back(a);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsageError;
  }

  std::size_t chosen = 0;
  while (!apps[chosen]->parsed()) ++chosen;
  try {
    if (!s.config_path.empty()) apply_config_file(*apps[chosen], s.config_path);
    set_thread_count(s.threads);
    Context c;
    c.s = s;
    c.cfg = experiment_config(s);
    c.header = {config_hash(s), master_seed(s)};
    c.out = output_dir(s);
    fs::create_directories(c.out);
    return subs[chosen].run(c);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

}  // namespace tensmooth::cli
