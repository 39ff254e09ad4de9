#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <spdlog/spdlog.h>

#include "mvtrace/commands.hpp"
#include "mvtrace/error.hpp"
#include "mvtrace/matrix_io.hpp"
#include "mvtrace/mesh.hpp"
#include "mvtrace/pca.hpp"
#include "mvtrace/trace_regression.hpp"

namespace py = pybind11;
using namespace mvtrace;

namespace {

py::dict summary_dict(const CvResult& cv) {
  py::dict d;
  d["mean_mse"] = cv.mean_mse;
  d["se_mse"] = cv.se_mse;
  d["mean_r2"] = cv.mean_r2;
  d["se_r2"] = cv.se_r2;
  d["pooled_r2"] = cv.pooled_r2;
  d["latent_dim"] = cv.latent_dim;
  std::vector<double> mse, r2;
  for (const auto& f : cv.folds) {
    mse.push_back(f.mse);
    r2.push_back(f.r2);
  }
  d["fold_mse"] = mse;
  d["fold_r2"] = r2;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mvtrace, m) {
  m.doc() = "Multi-view representation learning with trace regression";
  m.attr("__version__") = kVersion;
  spdlog::set_level(spdlog::level::warn);

  // Translators run newest first, so the derived type is registered last.
  auto base_error = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base_error.ptr());

  m.def("set_log_level", [](const std::string& level) { spdlog::set_level(spdlog::level::from_str(level)); },
        py::arg("level"));

  m.def("read_mvrl", [](const std::filesystem::path& p) { return read_mvrl(p); }, py::arg("path"));
  m.def("write_mvrl", [](const std::filesystem::path& p, const Eigen::MatrixXd& a) { write_mvrl(p, a); },
        py::arg("path"), py::arg("matrix"));

  m.def(
      "mesh_laplacian",
      [](const std::string& spec) {
        const Mesh mesh = make_mesh_from_spec(spec);
        return Eigen::MatrixXd(GraphLaplacian(mesh.vertex_count(), mesh.edges()).matrix());
      },
      py::arg("spec"), "Dense combinatorial Laplacian of an 'icosphere-K' or 'grid-RxC' mesh.");

  m.def("prox_group", &prox_group, py::arg("beta"), py::arg("threshold"));
  m.def("mean_squared_error", &mean_squared_error, py::arg("y_true"), py::arg("y_pred"));
  m.def("r_squared", &r_squared, py::arg("y_true"), py::arg("y_pred"));
  m.def(
      "make_folds",
      [](int n, int k, std::uint64_t seed) { return make_folds(n, k, seed).folds; }, py::arg("n"), py::arg("k"),
      py::arg("seed"));

  m.def(
      "significance_map",
      [](const std::vector<Eigen::MatrixXd>& betas, double t_crit, const std::string& reduction) {
        const SignificanceMap s = significance_map(betas, t_crit, row_reduction_from_string(reduction));
        return py::make_tuple(s.t, s.mask);
      },
      py::arg("betas"), py::arg("t_crit") = 2.45, py::arg("reduction") = "signed-norm",
      "Per-vertex t statistics and the t > t_crit mask.");

  m.def(
      "fit_trace_regression",
      [](const std::vector<Eigen::MatrixXd>& latents, const Eigen::VectorXd& y, const Eigen::MatrixXd& laplacian,
         double alpha, double eta, int max_iters) {
        std::vector<std::pair<int, int>> edges;
        for (Eigen::Index i = 0; i < laplacian.rows(); ++i)
          for (Eigen::Index j = i + 1; j < laplacian.cols(); ++j)
            if (laplacian(i, j) != 0.0) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
        RegressionDataset data(latents, y, GraphLaplacian(static_cast<int>(laplacian.rows()), edges));
        RegularizationConfig reg;
        reg.alpha = alpha;
        reg.eta = eta;
        FistaConfig fista;
        fista.max_iters = max_iters;
        FitResult fit = fit_mfista(data, reg, fista);
        return py::make_tuple(fit.beta, fit.objective_trace, fit.converged);
      },
      py::arg("latents"), py::arg("y"), py::arg("laplacian"), py::arg("alpha"), py::arg("eta"),
      py::arg("max_iters") = 2000,
      "Group-sparse, Laplacian-smoothed trace regression by monotone FISTA. The Laplacian's "
      "off-diagonal pattern defines the graph edges.");

  m.def(
      "generate",
      [](const std::string& config_json) {
        py::gil_scoped_release release;
        cmd_generate(parse_generate_config(config_json));
      },
      py::arg("config_json"), "Write a synthetic dataset; same JSON schema as `mvtrace generate`.");
  m.def(
      "run",
      [](const std::string& config_json) {
        RunOutput out;
        {
          py::gil_scoped_release release;
          out = cmd_run(parse_run_config(config_json));
        }
        py::dict d = summary_dict(out.cv);
        d["significant"] = out.significance.significant();
        return d;
      },
      py::arg("config_json"), "Cross-validated run; same JSON schema as `mvtrace run`.");
  m.def("inspect", &cmd_inspect, py::arg("path"));
}
