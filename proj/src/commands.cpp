#include "mvtrace/commands.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "mvtrace/dataset_io.hpp"
#include "mvtrace/error.hpp"
#include "mvtrace/matrix_io.hpp"
#include "mvtrace/nn.hpp"

namespace mvtrace {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text << '\n';
}

void write_significance(const fs::path& dir, const SignificanceMap& map) {
  auto csv = open_out(dir / "significance.csv");
  write_significance_csv(csv, map);
  write_mvrl(dir / "significance_t.mvrl", Eigen::MatrixXd(map.t));
}

fs::path beta_path(const fs::path& run_dir, int fold) {
  return run_dir / "folds" / ("beta_fold" + std::to_string(fold) + ".mvrl");
}

// Manifests record absolute paths so they can be rerun from any directory.
std::string manifest_text(const std::string& command, RunConfig config) {
  config.dataset = fs::absolute(config.dataset).lexically_normal();
  config.output = fs::absolute(config.output).lexically_normal();
  std::vector<std::uint64_t> seeds;
  for (int f = 0; f < config.folds; ++f) seeds.push_back(fold_seed(config.pipeline.seed, f));
  return make_manifest(command, to_json_text(config), seeds);
}

struct Inputs {
  LoadedDataset data;
  GraphLaplacian laplacian;
  CvPlan plan;
};

Inputs load_inputs(const RunConfig& config) {
  if (!fs::is_directory(config.dataset)) {
    throw ConfigError("dataset", "not a directory: " + config.dataset.string());
  }
  if (config.output.empty()) throw ConfigError("output", "missing");
  LoadedDataset data = load_dataset(config.dataset);
  GraphLaplacian lap = build_laplacian(data.mesh);
  CvPlan plan = make_folds(static_cast<int>(data.subjects.size()), config.folds, config.pipeline.seed);
  return {std::move(data), std::move(lap), std::move(plan)};
}

std::string magic_of(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char buf[4] = {0, 0, 0, 0};
  in.read(buf, 4);
  return std::string(buf, static_cast<std::size_t>(in.gcount()));
}

}  // namespace

void cmd_generate(const GenerateConfig& config) {
  if (config.output.empty()) throw ConfigError("output", "missing");
  const SyntheticDataset ds = generate(config.generator);
  save_dataset(config.output, ds.mesh, ds.subjects, &ds.truth);
  GenerateConfig resolved = config;
  resolved.output = fs::absolute(config.output).lexically_normal();
  write_text(config.output / "manifest.json", make_manifest("generate", to_json_text(resolved), {config.generator.seed}));
  spdlog::info("generated {} subjects on {} vertices in {}", ds.subjects.size(), ds.mesh.vertex_count(),
               config.output.string());
}

RunOutput cmd_run(const RunConfig& config) {
  config.validate();
  const Inputs in = load_inputs(config);
  RunOutput result;
  result.cv = run_cv(in.data.subjects, in.laplacian, config.pipeline, in.plan);

  const fs::path& out = config.output;
  fs::create_directories(out / "folds");
  const auto& spec = config.pipeline.representation;
  const std::string name = spec.label();
  {
    auto csv = open_out(out / "results.csv");
    write_results_csv(csv, fold_rows(name, spec, result.cv));
  }
  {
    auto csv = open_out(out / "summary.csv");
    write_summary_csv(csv, {summarize(name, spec, result.cv)});
  }
  {
    auto csv = open_out(out / "predictions.csv");
    csv << "fold,subject,score,prediction\n";
    for (const auto& f : result.cv.folds)
      for (std::size_t i = 0; i < f.test_subjects.size(); ++i)
        csv << f.fold_id << ',' << in.data.subjects[static_cast<std::size_t>(f.test_subjects[i])].id << ','
            << f.truth(static_cast<Eigen::Index>(i)) << ',' << f.predictions(static_cast<Eigen::Index>(i)) << '\n';
  }
  {
    auto meta = open_out(out / "folds" / "folds.csv");
    meta << "fold,alpha,eta,iterations,converged,nonzero_rows\n";
    for (const auto& f : result.cv.folds) {
      meta << f.fold_id << ',' << f.alpha << ',' << f.eta << ',' << f.objective_trace.size() - 1 << ','
           << (f.converged ? 1 : 0) << ',' << nonzero_rows(f.beta).size() << '\n';
      write_mvrl(beta_path(out, f.fold_id), f.beta);
      auto side = open_out(out / "folds" / ("beta_fold" + std::to_string(f.fold_id) + ".txt"));
      write_beta_sidecar(side, f.beta);
      auto trace = open_out(out / "folds" / ("trace_fold" + std::to_string(f.fold_id) + ".csv"));
      trace << "iteration,objective\n";
      for (std::size_t i = 0; i < f.objective_trace.size(); ++i) trace << i << ',' << f.objective_trace[i] << '\n';
    }
  }
  std::vector<Eigen::MatrixXd> betas;
  for (const auto& f : result.cv.folds) betas.push_back(f.beta);
  result.significance = significance_map(betas, config.significance.t_crit, config.significance.reduction);
  write_significance(out, result.significance);
  write_text(out / "manifest.json", manifest_text("run", config));
  spdlog::info("run {}: mse {:.4f} +- {:.4f}, r2 {:.4f} +- {:.4f}, {} significant vertices", name,
               result.cv.mean_mse, result.cv.se_mse, result.cv.mean_r2, result.cv.se_r2,
               result.significance.significant().size());
  return result;
}

SweepResult cmd_sweep(const RunConfig& config) {
  config.validate();
  std::vector<SweepPoint> grid = expand_grid(config);
  const Inputs in = load_inputs(config);
  SweepResult result = sweep(grid, in.data.subjects, in.laplacian, in.plan);
  fs::create_directories(config.output);
  {
    auto csv = open_out(config.output / "sweep_results.csv");
    write_results_csv(csv, result.rows);
  }
  {
    auto csv = open_out(config.output / "sweep_summary.csv");
    write_summary_csv(csv, result.summary);
  }
  write_text(config.output / "manifest.json", manifest_text("sweep", config));
  return result;
}

SignificanceMap cmd_map(const fs::path& run_dir, const SignificanceConfig& config, const fs::path& out_dir) {
  std::vector<Eigen::MatrixXd> betas;
  for (int k = 0; fs::exists(beta_path(run_dir, k)); ++k) betas.push_back(read_mvrl(beta_path(run_dir, k)));
  if (betas.size() < 2) {
    throw ValidationError("need at least two fold maps under " + (run_dir / "folds").string());
  }
  SignificanceMap map = significance_map(betas, config.t_crit, config.reduction);
  fs::create_directories(out_dir);
  write_significance(out_dir, map);
  return map;
}

std::string cmd_inspect(const fs::path& path) {
  std::ostringstream os;
  if (fs::is_directory(path)) {
    if (fs::exists(path / "subjects.csv")) {
      const LoadedDataset d = load_dataset(path);
      os << "dataset " << path.string() << "\n  vertices " << d.mesh.vertex_count() << "\n  subjects "
         << d.subjects.size() << "\n  d_task " << (d.subjects.empty() ? 0 : d.subjects[0].task.cols())
         << "\n  d_rest " << (d.subjects.empty() ? 0 : d.subjects[0].rest.cols()) << "\n  planted support "
         << d.support.size() << '\n';
      return os.str();
    }
    if (fs::exists(path / "manifest.json")) {
      std::ifstream in(path / "manifest.json");
      os << in.rdbuf();
      return os.str();
    }
    throw ValidationError(path.string() + " is neither a dataset nor a run directory");
  }
  const std::string magic = magic_of(path);
  if (magic == "MVRL") {
    const MvrlHeader h = read_mvrl_header(path);
    os << "MVRL v" << h.version << ' ' << h.rows << " x " << h.cols << '\n';
  } else if (magic == "MVNN") {
    std::ifstream in(path, std::ios::binary);
    in.seekg(4);
    const std::uint32_t version = binio::get_u32(in);
    in.seekg(0);
    if (version == kMvnnVersionSingle) {
      const Mlp mlp = read_mlp(in);
      os << "MVNN v1 network, " << mlp.layers().size() << " layers\n";
    } else {
      const MvnnContainer c = read_container(in);
      os << "MVNN v2 container, " << c.networks.size() << " networks\n" << c.header << '\n';
    }
  } else if (path.extension() == ".off") {
    const Mesh mesh = load_mesh(path);
    os << "OFF mesh " << mesh.vertex_count() << " vertices, " << mesh.faces().size() << " faces, "
       << mesh.edges().size() << " edges\n";
  } else {
    throw ParseError("unrecognised file format: " + path.string());
  }
  return os.str();
}

std::string error_json(const std::exception& e) {
  json err{{"kind", "internal"}, {"message", e.what()}};
  if (const auto* me = dynamic_cast<const Error*>(&e)) err["kind"] = me->kind();
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) err["field"] = ce->field();
  return json{{"error", err}}.dump();
}

}  // namespace mvtrace
