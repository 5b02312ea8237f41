#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "btc/liouvillian.hpp"

namespace btc::cli {

/// Everything a subcommand needs; serialized to run.json next to the CSVs.
/// Frequencies are in units of kappa and times in units of 1/kappa.
struct RunConfig {
  std::string subcommand;
  int n_spins = 20;
  double omega0 = 1.5;
  double kappa = 1.0;
  double omega_x = 0.0;
  double omega_z = 0.0;
  std::optional<double> t_max;
  double dt = 0.01;
  int stride = 10;
  double theta = 1.5707963267948966;
  double phi = 0.0;
  /// "coherent" (theta, phi) or "mixed".
  std::string initial = "coherent";
  double epsilon_nu = 0.025;
  std::string nu_filter = "scaled";
  std::vector<int> sizes;
  int k = 5;
  std::vector<double> scan_omega0;
  std::optional<std::array<double, 3>> m0;
  std::string integrator = "adaptive";
  std::string ness_method = "lu";
  std::string observable = "sz";
  int n_q = 12;
  int n_p = 12;
  double trace_dt = 0.1;
  double trace_t_max = 20.0;
  bool transition = false;
  std::filesystem::path out = "out";

  /// Model parameters in units of kappa (kappa = 1 internally).
  ModelParams params() const;
};

/// "start:stop:step", inclusive of start and of any value below stop + step/2.
std::vector<double> parse_range(const std::string& text);
/// Comma list "12,16,20" or an integer range "12:36:2".
std::vector<int> parse_sizes(const std::string& text);

int cmd_spectrum(const RunConfig& config);
int cmd_gapscan(const RunConfig& config);
int cmd_evolve(const RunConfig& config);
int cmd_scaling(const RunConfig& config);
int cmd_ness(const RunConfig& config);
int cmd_meanfield(const RunConfig& config);
int cmd_portrait(const RunConfig& config);

/// Parses arguments and dispatches. Returns 0 on success, 1 on runtime
/// failure and 2 on usage errors.
int run_cli(int argc, char** argv);

}  // namespace btc::cli
