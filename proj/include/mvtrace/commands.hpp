#pragma once

#include <exception>
#include <filesystem>
#include <string>

#include "mvtrace/config.hpp"
#include "mvtrace/evaluation.hpp"

namespace mvtrace {

// Writes the dataset contract plus manifest.json into config.output
// (created if missing).
void cmd_generate(const GenerateConfig& config);

struct RunOutput {
  CvResult cv;
  SignificanceMap significance;
};

// Output directory layout:
//   results.csv, summary.csv, predictions.csv
//   folds/beta_fold<k>.mvrl (+ .txt sidecar), folds/trace_fold<k>.csv, folds/folds.csv
//   significance.csv, significance_t.mvrl, manifest.json
// The dataset directory is only read.
RunOutput cmd_run(const RunConfig& config);

// sweep_results.csv, sweep_summary.csv and manifest.json in config.output.
SweepResult cmd_sweep(const RunConfig& config);

// Recomputes the significance map from a run directory's stored fold maps
// and writes significance.csv and significance_t.mvrl into `out_dir`.
SignificanceMap cmd_map(const std::filesystem::path& run_dir, const SignificanceConfig& config,
                        const std::filesystem::path& out_dir);

// Human-readable description of an MVRL, MVNN or OFF file, a dataset
// directory or a run directory.
std::string cmd_inspect(const std::filesystem::path& path);

// {"error": {"kind": ..., "message": ..., "field": ...}}; "field" only for config errors.
std::string error_json(const std::exception& e);

}  // namespace mvtrace
