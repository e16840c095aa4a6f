#pragma once

// Command-line and config-file settings. Every config key `section.key` is
// also the flag `--section.key`; flags win over the config file.

#include <cstdint>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tensmooth/experiment.hpp"
#include "tensmooth/verification.hpp"

namespace tensmooth::cli {

/// Invalid flags, config keys or values (exit code 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Settings {
  // phantom
  std::string dims = "128,128,4";
  std::string spacing = "0.01875,0.01875,0.05";
  std::string band_table;
  bool vertical_bands_x_oriented = false;
  int interior_distance = 4;
  // noise
  std::string noise_model = "rician";
  double sigma = 0.1;
  int repeats = 2;
  double s0 = 10.0;
  int nu = 20;
  double eta = 0.1;
  // fit
  std::string fit_method = "nonlinear";
  bool project = false;
  double max_failure_fraction = 0.01;
  double fit_tol = 1e-10;
  int fit_max_iter = 100;
  // smoothing
  std::string metrics = "euclidean,log_euclidean,affine";
  std::string bandwidths = "0.005,0.01,0.025,0.035";
  std::string aniso_pairs = "0.005:0.01,0.01:0.01,0.01:0.025";
  double threshold = 1e-6;
  double swelling_margin = 0.01;
  // run
  std::string seeds;
  // verify
  std::string suites = "perturbation,regression,mle,signal_bias,bessel";
  std::size_t variance_replicates = 100000;
  std::size_t bias_replicates = 200000;
  std::size_t ordering_tensors = 50;
  std::size_t mle_replicates = 20000;
  std::size_t signal_draws = 1000000;
  // weights
  std::string voxel = "64,64,1";
  // input
  std::string input_field;
  std::string input_truth;
  std::string input_dwi;
  std::string input_scheme;
  // output
  std::string output_dir;
  // global
  std::uint64_t seed = 1;
  int threads = 0;
  std::string config_path;
};

/// Registers every setting on `app`.
void register_options(CLI::App& app, Settings& s);

/// Applies an INI-style config file to options not given on the command
/// line. Unknown keys are usage errors.
void apply_config_file(CLI::App& app, const std::string& path);

/// Items separated by commas or blanks.
std::vector<std::string> parse_list(const std::string& text);
std::vector<double> parse_reals(const std::string& text, const std::string& key);
std::vector<std::uint64_t> parse_seeds(const Settings& s);

ExperimentConfig experiment_config(const Settings& s);
std::array<int, 3> parse_voxel(const Settings& s);

/// Normalized settings that determine output contents (no output directory,
/// thread count or config path).
nlohmann::json config_echo(const Settings& s);
std::uint64_t config_hash(const Settings& s);

/// --output.dir, else $TENSMOOTH_OUTPUT_DIR, else ./tensmooth_out.
std::string output_dir(const Settings& s);

}  // namespace tensmooth::cli
