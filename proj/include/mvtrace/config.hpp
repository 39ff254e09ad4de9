#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mvtrace/evaluation.hpp"
#include "mvtrace/synth.hpp"

namespace mvtrace {

inline constexpr const char* kVersion = "0.1.0";

struct SignificanceConfig {
  double t_crit = 2.45;
  RowReduction reduction = RowReduction::signed_norm;
};

// Resolved configuration of `run` and `sweep`. Relative paths in a config
// file are resolved against the file's directory.
struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path output;
  int folds = 10;
  PipelineConfig pipeline;  // pipeline.seed also seeds the fold partition
  SignificanceConfig significance;
  std::string grid_json;  // raw "grid" value; empty when absent

  void validate() const;
};

struct GenerateConfig {
  std::filesystem::path output;
  GeneratorConfig generator;
};

// JSON parsing. Unknown keys and out-of-range values raise ConfigError
// naming the offending field, e.g. "representation.enc".
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
GenerateConfig parse_generate_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
GenerateConfig load_generate_config(const std::filesystem::path& path);

// Canonical JSON text; parsing it back yields an identical configuration.
std::string to_json_text(const RunConfig& config);
std::string to_json_text(const GenerateConfig& config);

// Applies an RFC 7386 merge patch to a config's JSON text.
std::string merge_patch(const std::string& json_text, const std::string& patch_text);

// Grid forms:
//   {"enc": [2, 4, 8]}                      one point per encoding width
//   {"enc_split": [[8, 2], [5, 5]]}          one point per (enc_t, enc_r)
//   [{"name": "a", ...patch}, ...]           merge patches over the base config
// Throws ConfigError("grid") when no points result.
std::vector<SweepPoint> expand_grid(const RunConfig& config);

// The manifest is the resolved config plus provenance under "manifest";
// feeding it back to `run` reproduces the run.
std::string make_manifest(const std::string& command, const std::string& config_json,
                          const std::vector<std::uint64_t>& seeds);

}  // namespace mvtrace
