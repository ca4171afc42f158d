#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "dgtau/io.hpp"

namespace dgtau::cli {

struct RunConfig {
  std::string system = "advection1d";
  std::string flux = "penalty";
  std::vector<double> taus;  ///< empty selects the command default
  int elements = 8;
  int nx = 4;
  int ny = 4;
  std::vector<double> domain;  ///< empty: [-1, 1] per direction
  std::string bc;              ///< empty: periodic for advection, wall for acoustics
  int degree = 3;
  std::array<double, 2> beta{1.0, 0.0};
  bool track = false;
  bool export_matrices = false;
  // expand-mode and track
  double mode_tau = 100.0;
  double basis_tau = 1.0;
  double return_factor = 5.0;
  double coefficient_threshold = 1e-13;
  int candidates = 2;
  // integrate
  int steps = 1000;
  double dt = 0.0;  ///< 0 selects cfl / rho
  double cfl = 0.5;
  std::string init = "gaussian";
  int mode_index = 0;
  int snapshot_every = 0;
  // preset
  std::string preset;
};

/// Accepts "tau" (number), "taus" (array) or "tau_range" (string) for the samples.
RunConfig config_from_json(const io::Json& j);
io::Json config_to_json(const RunConfig& c);

/// "a:b:n" gives n evenly spaced samples, "a:b:logn" n geometric samples (a > 0);
/// endpoints are exact.
std::vector<double> parse_tau_range(const std::string& spec);

/// $DGTAU_OUTPUT_ROOT, or the working directory.
std::filesystem::path output_root();

struct RunResult {
  std::vector<std::string> files;  ///< relative to the output directory, sorted
  io::Json summary;
};

/// Runs one subcommand and writes its artifacts plus manifest.json into `out_dir`.
RunResult run_command(const std::string& command, const RunConfig& config, const std::filesystem::path& out_dir);

/// Re-runs the command recorded in a manifest.
RunResult replay_manifest(const std::filesystem::path& manifest, const std::filesystem::path& out_dir);

extern const std::vector<std::string> kCommands;
extern const std::vector<std::string> kPresets;

/// Full command-line entry point; returns the process exit code
/// (0 ok, 2 configuration error, 3 numerical failure).
int main_entry(int argc, char** argv);

}  // namespace dgtau::cli
