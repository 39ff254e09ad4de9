#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mvtrace/commands.hpp"
#include "mvtrace/error.hpp"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

void configure_logging() {
  // Logs go to stderr so that stdout stays machine-readable.
  spdlog::set_default_logger(spdlog::stderr_color_mt("mvtrace"));
  const char* level = std::getenv("MVTRACE_LOG");
  const std::string name = level ? level : "info";
  if (name == "error") spdlog::set_level(spdlog::level::err);
  else if (name == "debug") spdlog::set_level(spdlog::level::debug);
  else if (name == "info") spdlog::set_level(spdlog::level::info);
  else throw mvtrace::ConfigError("MVTRACE_LOG", "expected error, info or debug");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw mvtrace::IoError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Flags shared by run and sweep; each one set on the command line becomes a
// merge patch over the config file.
struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out, data;
  std::string arch, hidden_act, output_act, enc_split;
  std::optional<int> enc, epochs, batch;
  std::optional<double> lr;

  void add_to(CLI::App* app) {
    app->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "seed for folds, training and solver");
    app->add_option("--jobs", jobs, "concurrent folds or grid points");
    app->add_option("--out", out, "output directory");
    app->add_option("--data", data, "dataset directory");
    app->add_option("--arch", arch, "monomodal-task | monomodal-rest | concat-ae | mdae");
    app->add_option("--enc", enc, "encoding width");
    app->add_option("--enc-split", enc_split, "MDAE bottleneck split as T,R");
    app->add_option("--hidden-act", hidden_act, "linear | relu | sigmoid");
    app->add_option("--output-act", output_act, "linear | relu | sigmoid");
    app->add_option("--epochs", epochs);
    app->add_option("--batch", batch);
    app->add_option("--lr", lr);
  }

  mvtrace::RunConfig resolve() const {
    json patch = json::object();
    json rep = json::object();
    if (seed) patch["seed"] = *seed;
    if (jobs) patch["jobs"] = *jobs;
    if (!arch.empty()) {
      rep["method"] = "autoencoder";
      rep["arch"] = arch;
    }
    if (enc) rep["enc"] = *enc;
    if (!enc_split.empty()) {
      int t = 0, r = 0;
      char comma = 0;
      std::istringstream ss(enc_split);
      if (!(ss >> t >> comma >> r) || comma != ',' || !ss.eof()) {
        throw mvtrace::ConfigError("enc-split", "expected T,R");
      }
      rep["enc_t"] = t;
      rep["enc_r"] = r;
      if (!enc) rep["enc"] = t + r;
    }
    if (!hidden_act.empty()) rep["hidden_act"] = hidden_act;
    if (!output_act.empty()) rep["output_act"] = output_act;
    if (epochs) rep["epochs"] = *epochs;
    if (batch) rep["batch"] = *batch;
    if (lr) rep["lr"] = *lr;
    if (!rep.empty()) patch["representation"] = rep;

    const std::string base = config.empty() ? std::string("{}") : read_text(config);
    const fs::path base_dir = config.empty() ? fs::path() : fs::path(config).parent_path();
    mvtrace::RunConfig rc = mvtrace::parse_run_config(mvtrace::merge_patch(base, patch.dump()), base_dir);
    if (!out.empty()) rc.output = out;
    if (!data.empty()) rc.dataset = data;
    if (rc.dataset.empty()) throw mvtrace::ConfigError("dataset", "missing; set it in the config or pass --data");
    if (rc.output.empty()) throw mvtrace::ConfigError("output", "missing; set it in the config or pass --out");
    return rc;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view representation learning with trace regression"};
  app.require_subcommand(1);

  std::string gen_config, gen_out;
  std::optional<std::uint64_t> gen_seed;
  auto* gen = app.add_subcommand("generate", "write a synthetic dataset");
  gen->add_option("--config", gen_config, "JSON generator configuration")->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "dataset directory");
  gen->add_option("--seed", gen_seed, "generator seed");

  RunFlags run_flags, sweep_flags;
  auto* run = app.add_subcommand("run", "cross-validated pipeline on a dataset");
  run_flags.add_to(run);
  auto* swp = app.add_subcommand("sweep", "cross-validated pipeline over a configuration grid");
  sweep_flags.add_to(swp);

  std::string map_dir, map_out, map_reduction = "signed-norm";
  double map_t = 2.45;
  auto* map = app.add_subcommand("map", "recompute the significance map from stored fold maps");
  map->add_option("run_dir", map_dir, "run output directory")->required()->check(CLI::ExistingDirectory);
  map->add_option("--t-crit", map_t, "t threshold");
  map->add_option("--reduction", map_reduction, "signed-norm | norm | mean-entry | max-abs-entry");
  map->add_option("--out", map_out, "output directory (defaults to run_dir)");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "describe a matrix, model, mesh, dataset or run");
  inspect->add_option("path", inspect_path)->required()->check(CLI::ExistingPath);

  CLI11_PARSE(app, argc, argv);

  try {
    configure_logging();
    if (gen->parsed()) {
      mvtrace::GenerateConfig gc;
      if (!gen_config.empty()) gc = mvtrace::load_generate_config(gen_config);
      if (!gen_out.empty()) gc.output = gen_out;
      if (gen_seed) gc.generator.seed = *gen_seed;
      mvtrace::cmd_generate(gc);
    } else if (run->parsed()) {
      mvtrace::cmd_run(run_flags.resolve());
    } else if (swp->parsed()) {
      mvtrace::cmd_sweep(sweep_flags.resolve());
    } else if (map->parsed()) {
      mvtrace::SignificanceConfig sc;
      sc.t_crit = map_t;
      sc.reduction = mvtrace::row_reduction_from_string(map_reduction);
      const auto result = mvtrace::cmd_map(map_dir, sc, map_out.empty() ? map_dir : map_out);
      std::cout << result.significant().size() << " significant vertices\n";
    } else if (inspect->parsed()) {
      std::cout << mvtrace::cmd_inspect(inspect_path);
    }
  } catch (const std::exception& e) {
    std::cerr << mvtrace::error_json(e) << '\n';
    return 1;
  }
  return 0;
}
