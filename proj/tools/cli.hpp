#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "photocorr/coherence.hpp"
#include "photocorr/correlator.hpp"
#include "photocorr/error.hpp"
#include "photocorr/heterodyne.hpp"
#include "photocorr/qsim.hpp"

namespace photocorr::cli {

namespace fs = std::filesystem;

/// Provenance record written next to every command's outputs.
struct RunManifest {
  std::string command;
  std::string config_hash;  // SHA-256 of the canonical configuration
  std::uint64_t seed = 0;
  std::string tool_version;
  std::vector<std::string> input_paths;
  std::vector<std::string> output_paths;
  double wall_time_s = 0.0;
  nlohmann::json config;  // canonical configuration that was hashed
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const RunManifest& m, const fs::path& path);
RunManifest read_manifest(const fs::path& path);

/// Hex SHA-256 of the compact dump of `j` (keys sorted).
std::string config_hash(const nlohmann::json& j);

/// Process exit code for an error kind: 2 usage, 3 data, 4 accuracy/separability.
int exit_code(ErrorKind kind) noexcept;

/// Validates a simulate configuration and fills defaults. Throws
/// Error(config) naming every missing or unknown key.
nlohmann::json normalize_simulate_config(const nlohmann::json& raw);

/// Stream for a normalised simulate configuration.
TagStream simulate_from_config(const nlohmann::json& config, unsigned workers = 1);

/// Runs a scenario from a JSON file; writes the PTAG file and
/// `<output>.manifest.json`. `output` overrides the config's "output" key.
RunManifest cmd_simulate(const fs::path& config_path, const std::optional<fs::path>& output = {},
                         unsigned workers = 1);

struct CorrelateOptions {
  fs::path stream;
  fs::path out_dir = ".";
  double bin_ns = 1.0;
  std::optional<double> window_start_ns;
  std::optional<double> window_end_ns;
  double tau_max_ns = 50.0;
  std::size_t bootstrap = 200;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct CorrelateResult {
  bool empty = false;
  SteadyStateWindow window;
  CoherenceSeries g2;
  RunManifest manifest;
};

/// Writes g2_matrix.csv, g2_tau.csv, intensity.csv and manifest.json.
CorrelateResult cmd_correlate(const CorrelateOptions& o);

struct AnalyzeOptions {
  fs::path g2_csv;
  std::optional<fs::path> g1_csv;               // demodulated g1 (tau_ps, g1_recovered, stderr)
  std::optional<TwoLevelParams> oracle;         // single-atom g1 binned like the g2 grid
  double mean_field_ratio = 0.0;                // used when no g1 tail is available
  double mean_field_threshold = 0.05;
  double zero_window_ns = 2.0;
  fs::path out_dir = ".";
};

struct AnalyzeSummary {
  double g2_zero = 0.0;         // average over |tau| <= zero_window
  double g2_zero_sigma = 0.0;
  double siegert_zero = 0.0;
  double bound_zero = 0.0;      // siegert_zero - g2_zero
  double bound_zero_sigma = 0.0;
  double sigma_level = 0.0;     // bound_zero / bound_zero_sigma
  double connected_zero = 0.0;  // C at tau = 0
  double connected_zero_sigma = 0.0;
  double mean_field_ratio = 0.0;
  std::optional<TailBound> tail;
  std::string verdict;
};

nlohmann::json to_json(const AnalyzeSummary& s);

/// Writes siegert.csv, connected.csv, summary.json and manifest.json.
AnalyzeSummary cmd_analyze(const AnalyzeOptions& o);

struct HeterodyneOptions {
  std::optional<fs::path> g2_hd_csv;     // measured g2_HD (correlate output)
  std::optional<TwoLevelParams> model;   // otherwise build g2_HD from the oracle
  double model_tau_max_ns = 50.0;
  std::int64_t model_step_ps = 100;
  HeterodyneConfig het;
  DemodOptions demod;
  SpectrumOptions spectrum;
  fs::path out_dir = ".";
};

struct HeterodyneResult {
  CoherenceSeries g2_hd;
  CoherenceSeries g1;
  SpectrumSeries spectrum;
};

/// Writes g1.csv, spectrum.csv (and g2_hd.csv for the model route) and manifest.json.
HeterodyneResult cmd_heterodyne(const HeterodyneOptions& o);

struct ScalingOptions {
  std::vector<fs::path> manifests;  // simulate manifests
  std::optional<fs::path> csv;      // or (N, intensity)
  double confidence_sigmas = 2.0;
  fs::path out_dir = ".";
};

/// Intensity per emitter unit, from a simulate manifest and its stream.
ScalingPoint scaling_point_from_manifest(const fs::path& manifest);

/// Writes scaling.csv and fit.json.
ScalingFit cmd_scaling(const ScalingOptions& o);

/// Full command line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace photocorr::cli
