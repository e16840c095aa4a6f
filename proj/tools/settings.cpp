#include "settings.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "tensmooth/io.hpp"

namespace tensmooth::cli {

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double to_real(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw UsageError(key + ": '" + text + "' is not a number");
  return v;
}

template <std::size_t N>
std::array<double, N> fixed_reals(const std::string& text, const std::string& key) {
  const auto v = parse_reals(text, key);
  if (v.size() != N) throw UsageError(key + ": expected " + std::to_string(N) + " values");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = v[i];
  return out;
}

std::array<int, 3> int_triple(const std::string& text, const std::string& key) {
  const auto v = fixed_reals<3>(text, key);
  std::array<int, 3> out{};
  for (int i = 0; i < 3; ++i) {
    if (v[i] != static_cast<int>(v[i])) throw UsageError(key + ": expected integers");
    out[i] = static_cast<int>(v[i]);
  }
  return out;
}

std::vector<std::pair<double, double>> parse_pairs(const std::string& text) {
  std::vector<std::pair<double, double>> out;
  for (const auto& item : split_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("smoothing.aniso_pairs: expected h1:h2, got '" + item + "'");
    out.emplace_back(to_real(item.substr(0, colon), "smoothing.aniso_pairs"),
                     to_real(item.substr(colon + 1), "smoothing.aniso_pairs"));
  }
  return out;
}

template <class F>
auto checked(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw UsageError(key + ": " + e.what());
  }
}

}  // namespace

void register_options(CLI::App& app, Settings& s) {
  app.add_option("--seed", s.seed, "Master seed");
  app.add_option("--threads", s.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--config", s.config_path, "INI config file")->check(CLI::ExistingFile);

  app.add_option("--phantom.dims", s.dims, "Grid size nx,ny,nz");
  app.add_option("--phantom.spacing", s.spacing, "Voxel spacing dx,dy,dz");
  app.add_option("--phantom.band_table", s.band_table, "Band table CSV replacing the built-in bands");
  app.add_option("--phantom.vertical_bands_x_oriented", s.vertical_bands_x_oriented,
                 "Use x-oriented tensors on the slice 3-4 vertical bands");
  app.add_option("--phantom.interior_distance", s.interior_distance, "Voxels separating interior from boundary");

  app.add_option("--noise.model", s.noise_model, "none, rician or spectral");
  app.add_option("--noise.sigma", s.sigma, "Rician noise level");
  app.add_option("--noise.repeats", s.repeats, "Repeats of the 9-direction scheme");
  app.add_option("--noise.s0", s.s0, "Non-weighted signal");
  app.add_option("--noise.nu", s.nu, "Spectral noise degrees of freedom");
  app.add_option("--noise.eta", s.eta, "Spectral noise rotation scale");

  app.add_option("--fit.method", s.fit_method, "linear, nonlinear or mle");
  app.add_option("--fit.project", s.project, "Write eigenvalue-floor projections of indefinite fits");
  app.add_option("--fit.max_failure_fraction", s.max_failure_fraction, "Largest tolerated non-converged fraction");
  app.add_option("--fit.tol", s.fit_tol, "Fit convergence tolerance");
  app.add_option("--fit.max_iter", s.fit_max_iter, "Fit iteration limit");

  app.add_option("--smoothing.metrics", s.metrics, "Comma-separated metrics");
  app.add_option("--smoothing.bandwidths", s.bandwidths, "Isotropic bandwidths");
  app.add_option("--smoothing.aniso_pairs", s.aniso_pairs, "Anisotropic bandwidth pairs h1:h2");
  app.add_option("--smoothing.threshold", s.threshold, "Kernel truncation threshold");
  app.add_option("--smoothing.swelling_margin", s.swelling_margin, "Relative determinant margin for swelling");

  app.add_option("--run.seeds", s.seeds, "Comma-separated seeds (default: --seed)");

  app.add_option("--verify.suites", s.suites, "perturbation,regression,mle,signal_bias,bessel");
  app.add_option("--verify.variance_replicates", s.variance_replicates, "Replicates for the variance checks");
  app.add_option("--verify.bias_replicates", s.bias_replicates, "Replicates for the bias check");
  app.add_option("--verify.ordering_tensors", s.ordering_tensors, "Random tensors for the variance ordering");
  app.add_option("--verify.mle_replicates", s.mle_replicates, "Replicates for the MLE variance");
  app.add_option("--verify.signal_draws", s.signal_draws, "Draws per signal-bias point");

  app.add_option("--weights.voxel", s.voxel, "Voxel i,j,k for weight profiles");

  app.add_option("--input.field", s.input_field, "Tensor field CSV");
  app.add_option("--input.truth", s.input_truth, "Noiseless tensor field CSV for error summaries");
  app.add_option("--input.dwi", s.input_dwi, "DWI signal CSV");
  app.add_option("--input.scheme", s.input_scheme, "Gradient scheme CSV");

  app.add_option("--output.dir", s.output_dir, "Output directory");
}

void apply_config_file(CLI::App& app, const std::string& path) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(path);
  } catch (const CLI::Error& e) {
    throw UsageError(path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string key = item.fullname();
    if (key == "config") throw UsageError(path + ": config files cannot include other config files");
    CLI::Option* opt = app.get_option_no_throw("--" + key);
    if (opt == nullptr) throw UsageError(path + ": unknown key '" + key + "'");
    if (opt->count() > 0) continue;
    std::string value;
    for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError(path + ": " + key + ": " + e.what());
    }
  }
}

std::vector<std::string> parse_list(const std::string& text) { return split_list(text); }

std::vector<double> parse_reals(const std::string& text, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(to_real(item, key));
  return out;
}

std::vector<std::uint64_t> parse_seeds(const Settings& s) {
  if (s.seeds.empty()) return {s.seed};
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(s.seeds)) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || item[0] == '-') throw UsageError("run.seeds: '" + item + "' is not a seed");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("run.seeds: empty list");
  return out;
}

std::array<int, 3> parse_voxel(const Settings& s) { return int_triple(s.voxel, "weights.voxel"); }

ExperimentConfig experiment_config(const Settings& s) {
  ExperimentConfig c;
  c.phantom = default_phantom_config(s.vertical_bands_x_oriented);
  c.phantom.grid.dims = int_triple(s.dims, "phantom.dims");
  c.phantom.grid.spacing = fixed_reals<3>(s.spacing, "phantom.spacing");
  for (int i = 0; i < 3; ++i) {
    if (c.phantom.grid.dims[i] < 1) throw UsageError("phantom.dims: must be positive");
    if (!(c.phantom.grid.spacing[i] > 0.0)) throw UsageError("phantom.spacing: must be positive");
  }
  if (!s.band_table.empty()) c.phantom.bands = read_band_table(s.band_table);
  if (s.interior_distance < 1) throw UsageError("phantom.interior_distance: must be at least 1");
  c.regions.interior_distance = s.interior_distance;

  c.noise = checked("noise.model", [&] { return parse_noise_model(s.noise_model); });
  if (!(s.sigma > 0.0)) throw UsageError("noise.sigma: must be positive");
  if (s.repeats < 1) throw UsageError("noise.repeats: must be at least 1");
  if (!(s.s0 > 0.0)) throw UsageError("noise.s0: must be positive");
  if (s.nu < 1) throw UsageError("noise.nu: must be at least 1");
  if (!(s.eta >= 0.0)) throw UsageError("noise.eta: must be non-negative");
  c.sigma = s.sigma;
  c.repeats = s.repeats;
  c.s0 = s.s0;
  c.spectral = {s.nu, s.eta};

  c.fit = checked("fit.method", [&] { return parse_fit_method(s.fit_method); });
  c.fit_options.tol = s.fit_tol;
  c.fit_options.max_iter = s.fit_max_iter;
  c.fit_options.project = s.project;
  if (!(s.max_failure_fraction >= 0.0 && s.max_failure_fraction <= 1.0))
    throw UsageError("fit.max_failure_fraction: must lie in [0, 1]");
  c.max_failure_fraction = s.max_failure_fraction;

  std::vector<Metric> metrics;
  for (const auto& m : split_list(s.metrics))
    metrics.push_back(checked("smoothing.metrics", [&] { return parse_metric(m); }));
  const auto hs = parse_reals(s.bandwidths, "smoothing.bandwidths");
  const auto pairs = parse_pairs(s.aniso_pairs);
  for (double h : hs)
    if (!(h > 0.0)) throw UsageError("smoothing.bandwidths: must be positive");
  for (const auto& [a, b] : pairs)
    if (!(a > 0.0 && b > 0.0)) throw UsageError("smoothing.aniso_pairs: must be positive");
  if (!metrics.empty() && hs.empty() && pairs.empty())
    throw UsageError("smoothing: bandwidth lists are empty");
  c.smoothers = smoother_grid(metrics, hs, pairs);
  if (!(s.threshold > 0.0 && s.threshold < 1.0)) throw UsageError("smoothing.threshold: must lie in (0, 1)");
  c.weights.threshold = s.threshold;
  c.swelling_margin = s.swelling_margin;
  return c;
}

nlohmann::json config_echo(const Settings& s) {
  using nlohmann::json;
  const auto seeds = parse_seeds(s);
  json j;
  j["phantom"] = {{"dims", int_triple(s.dims, "phantom.dims")},
                  {"spacing", fixed_reals<3>(s.spacing, "phantom.spacing")},
                  {"band_table", s.band_table},
                  {"vertical_bands_x_oriented", s.vertical_bands_x_oriented},
                  {"interior_distance", s.interior_distance}};
  j["noise"] = {{"model", s.noise_model}, {"sigma", s.sigma}, {"repeats", s.repeats},
                {"s0", s.s0},             {"nu", s.nu},       {"eta", s.eta}};
  j["fit"] = {{"method", s.fit_method},
              {"project", s.project},
              {"max_failure_fraction", s.max_failure_fraction},
              {"tol", s.fit_tol},
              {"max_iter", s.fit_max_iter}};
  j["smoothing"] = {{"metrics", split_list(s.metrics)},
                    {"bandwidths", parse_reals(s.bandwidths, "smoothing.bandwidths")},
                    {"aniso_pairs", parse_pairs(s.aniso_pairs)},
                    {"threshold", s.threshold},
                    {"swelling_margin", s.swelling_margin}};
  j["run"] = {{"seeds", seeds}};
  j["verify"] = {{"suites", split_list(s.suites)},
                 {"variance_replicates", s.variance_replicates},
                 {"bias_replicates", s.bias_replicates},
                 {"ordering_tensors", s.ordering_tensors},
                 {"mle_replicates", s.mle_replicates},
                 {"signal_draws", s.signal_draws}};
  j["weights"] = {{"voxel", parse_voxel(s)}};
  j["input"] = {{"field", s.input_field}, {"truth", s.input_truth}, {"dwi", s.input_dwi}, {"scheme", s.input_scheme}};
  return j;
}

std::uint64_t config_hash(const Settings& s) { return fnv1a64(config_echo(s).dump()); }

std::string output_dir(const Settings& s) {
  if (!s.output_dir.empty()) return s.output_dir;
  if (const char* env = std::getenv("TENSMOOTH_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "tensmooth_out";
}

}  // namespace tensmooth::cli
