#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mvtrace/commands.hpp"
#include "mvtrace/dataset_io.hpp"
#include "mvtrace/error.hpp"
#include "mvtrace/matrix_io.hpp"

using namespace mvtrace;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Workspace {
  fs::path root = fs::temp_directory_path() / "mvtrace_unit_commands";
  Workspace() {
    fs::remove_all(root);
    GenerateConfig g;
    g.output = root / "data";
    g.generator.n_subjects = 16;
    g.generator.mesh = "grid-6x6";
    g.generator.d_task = 4;
    g.generator.d_rest = 3;
    g.generator.k_true = 2;
    g.generator.n_clusters = 2;
    g.generator.cluster_size = 4;
    g.generator.seed = 5;
    cmd_generate(g);
  }
  ~Workspace() { fs::remove_all(root); }

  RunConfig run_config(const std::string& name) const {
    RunConfig c = parse_run_config(R"({"folds": 4, "seed": 2,
      "representation": {"method": "pca", "enc": 2},
      "regularization": {"alpha": 1, "eta": 0.5}})");
    c.dataset = root / "data";
    c.output = root / name;
    return c;
  }
};

}  // namespace

TEST_CASE("generate writes a loadable dataset with a manifest") {
  const Workspace w;
  const LoadedDataset ds = load_dataset(w.root / "data");
  CHECK(ds.subjects.size() == 16);
  CHECK(ds.support.size() == 8);
  const json m = json::parse(slurp(w.root / "data" / "manifest.json"));
  CHECK(m.at("manifest").at("command") == "generate");
  CHECK(m.at("generator").at("seed") == 5);
}

TEST_CASE("run writes every output and is reproducible") {
  const Workspace w;
  const RunOutput out = cmd_run(w.run_config("run1"));
  const fs::path dir = w.root / "run1";
  for (const char* f : {"results.csv", "summary.csv", "predictions.csv", "significance.csv", "significance_t.mvrl",
                        "manifest.json", "folds/folds.csv"})
    CHECK_MESSAGE(fs::exists(dir / f), f);
  for (int k = 0; k < 4; ++k) {
    const fs::path beta = dir / "folds" / ("beta_fold" + std::to_string(k) + ".mvrl");
    REQUIRE(fs::exists(beta));
    CHECK(read_mvrl(beta) == out.cv.folds[static_cast<std::size_t>(k)].beta);
    CHECK(fs::exists(dir / "folds" / ("trace_fold" + std::to_string(k) + ".csv")));
  }
  CHECK(slurp(dir / "summary.csv").rfind("config,enc,enc_t,enc_r,mse_mean,mse_se,r2_mean,r2_se\n", 0) == 0);

  // The manifest is itself a run config that reproduces the run.
  RunConfig again = load_run_config(dir / "manifest.json");
  again.output = w.root / "run2";
  cmd_run(again);
  CHECK(slurp(dir / "summary.csv") == slurp(w.root / "run2" / "summary.csv"));
  CHECK(slurp(dir / "results.csv") == slurp(w.root / "run2" / "results.csv"));
}

TEST_CASE("map recomputes the stored significance map") {
  const Workspace w;
  RunConfig c = w.run_config("run");
  c.significance.reduction = RowReduction::norm;
  const RunOutput out = cmd_run(c);
  SignificanceConfig s;
  s.reduction = RowReduction::norm;
  const SignificanceMap m = cmd_map(w.root / "run", s, w.root / "map");
  CHECK(m.mask == out.significance.mask);
  CHECK(slurp(w.root / "map" / "significance.csv") == slurp(w.root / "run" / "significance.csv"));
  CHECK_THROWS_AS(cmd_map(w.root / "nothing", s, w.root / "map2"), Error);
}

TEST_CASE("sweep writes one summary row per grid point") {
  const Workspace w;
  RunConfig c = parse_run_config(R"({"folds": 4, "representation": {"method": "pca"},
    "regularization": {"alpha": 1, "eta": 0.5}, "grid": {"enc": [1, 2, 3]}})");
  c.dataset = w.root / "data";
  c.output = w.root / "sweep";
  const SweepResult r = cmd_sweep(c);
  CHECK(r.summary.size() == 3);
  CHECK(r.rows.size() == 12);
  std::istringstream summary(slurp(w.root / "sweep" / "sweep_summary.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(summary, line)) ++lines;
  CHECK(lines == 4);
}

TEST_CASE("inspect describes files and directories") {
  const Workspace w;
  cmd_run(w.run_config("run"));
  CHECK(cmd_inspect(w.root / "data").find("16") != std::string::npos);
  CHECK(cmd_inspect(w.root / "run" / "folds" / "beta_fold0.mvrl").find("36") != std::string::npos);
  CHECK(cmd_inspect(w.root / "data" / "mesh.off").find("36") != std::string::npos);
  CHECK_FALSE(cmd_inspect(w.root / "run").empty());
  CHECK_THROWS_AS(cmd_inspect(w.root / "missing"), Error);
}

TEST_CASE("error json carries kind and field") {
  const json a = json::parse(error_json(ConfigError("representation.enc", "must lie in [2, 100]")));
  CHECK(a.at("error").at("kind") == "config");
  CHECK(a.at("error").at("field") == "representation.enc");
  const json b = json::parse(error_json(IoError("cannot open")));
  CHECK(b.at("error").at("kind") == "io");
  CHECK_FALSE(b.at("error").contains("field"));
  const json c = json::parse(error_json(std::runtime_error("boom")));
  CHECK(c.at("error").at("message") == "boom");
}

TEST_CASE("run rejects a missing dataset") {
  RunConfig c = parse_run_config("{}");
  c.dataset = "/nonexistent/dataset";
  c.output = fs::temp_directory_path() / "mvtrace_unit_nodata";
  CHECK_THROWS_AS(cmd_run(c), Error);
}
