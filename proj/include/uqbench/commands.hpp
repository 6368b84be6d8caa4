#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace uqbench::cli {

inline constexpr const char* kVersion = "0.1.0";

// Each command reads its inputs, writes only to the listed output paths,
// and reports warnings to `diag`. Failures are thrown as uqbench::Error.

struct IndexBuildArgs {
  std::filesystem::path latents;
  std::filesystem::path out;
};
void cmd_index_build(const IndexBuildArgs& args, std::ostream& out, std::ostream& diag);

struct EstimateDistanceArgs {
  std::filesystem::path index;
  std::filesystem::path latents;
  std::string agg = "atom-mean";
  std::filesystem::path out;
};
void cmd_estimate_distance(const EstimateDistanceArgs& args, std::ostream& diag);

struct EstimateEnsembleArgs {
  std::filesystem::path trajectories;
  std::string frame = "mean";
  std::filesystem::path out;
};
void cmd_estimate_ensemble(const EstimateEnsembleArgs& args, std::ostream& diag);

struct CalibrateArgs {
  std::filesystem::path records;
  std::filesystem::path sigmas;
  std::size_t bins = 20;
  std::uint64_t seed = 0;
  std::uint32_t resamples = 2000;
  double level = 0.95;
  std::filesystem::path out;
};
void cmd_calibrate(const CalibrateArgs& args, std::ostream& diag);

struct EvaluateArgs {
  std::filesystem::path records;
  std::filesystem::path sigmas;
  std::optional<std::filesystem::path> fit;
  double auroc_threshold = 0.1;
  std::uint64_t seed = 0;
  std::uint32_t resamples = 2000;
  double level = 0.95;
  std::size_t bins = 20;
  bool allow_uncalibrated = false;
  std::filesystem::path out;
};
void cmd_evaluate(const EvaluateArgs& args, std::ostream& diag);

struct ReportArgs {
  std::filesystem::path report;
  std::optional<std::filesystem::path> plot;
  std::optional<std::filesystem::path> csv;
};
void cmd_report(const ReportArgs& args, std::ostream& diag);

struct SynthArgs {
  std::filesystem::path config;
  std::filesystem::path out_dir;
};
void cmd_synth(const SynthArgs& args, std::ostream& diag);

/// Parses argv and dispatches; returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& diag);

}  // namespace uqbench::cli
