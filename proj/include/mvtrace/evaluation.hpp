#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvtrace/mesh.hpp"
#include "mvtrace/representation.hpp"
#include "mvtrace/subject.hpp"
#include "mvtrace/trace_regression.hpp"

namespace mvtrace {

struct CvPlan {
  int n_subjects = 0;
  int n_folds = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> folds;  // sorted test indices per fold

  std::vector<int> test_indices(int fold) const;
  std::vector<int> train_indices(int fold) const;
};

// Seeded random partition of [0, n) into k folds whose sizes differ by at most one.
CvPlan make_folds(int n, int k, std::uint64_t seed);

// Seed of everything random inside one outer fold (representation training, solver probes).
std::uint64_t fold_seed(std::uint64_t seed, int fold);

double mean_squared_error(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);
// 1 - SS_res / SS_tot. Throws ValidationError when y_true is constant.
double r_squared(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);

// Regression hyperparameters can optionally be chosen per outer fold by an
// inner k-fold grid search on the training subjects' latents.
struct InnerSearch {
  std::vector<double> alpha_grid;
  std::vector<double> eta_grid;
  int folds = 5;

  bool enabled() const { return !alpha_grid.empty() || !eta_grid.empty(); }
};

struct PipelineConfig {
  RepresentationSpec representation;
  RegularizationConfig regularization;
  FistaConfig fista;
  InnerSearch inner;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool keep_representations = false;
};

struct FoldResult {
  int fold_id = 0;
  double mse = 0.0;
  double r2 = 0.0;
  Eigen::MatrixXd beta;
  std::vector<int> test_subjects;
  Eigen::VectorXd predictions;
  Eigen::VectorXd truth;
  std::vector<double> objective_trace;
  bool converged = false;
  double alpha = 0.0;  // hyperparameters actually used
  double eta = 0.0;
  std::shared_ptr<const Representation> representation;  // when keep_representations
};

struct CvResult {
  std::vector<FoldResult> folds;
  double mean_mse = 0.0;
  double se_mse = 0.0;
  double mean_r2 = 0.0;
  double se_r2 = 0.0;
  double pooled_r2 = 0.0;  // R^2 of all out-of-fold predictions together
  int latent_dim = 0;
};

// Mean and standard error (sample sd / sqrt(k)).
std::pair<double, double> mean_and_se(const std::vector<double>& values);

// Per fold: fit the representation on training subjects only, encode every
// subject, fit trace regression on the training fold, score the test fold.
CvResult run_cv(const std::vector<SubjectRecord>& subjects, const GraphLaplacian& laplacian,
                const PipelineConfig& config, const CvPlan& plan);

// How each fold's d-vector at a vertex is reduced to the scalar that is t-tested.
enum class RowReduction { signed_norm, norm, mean_entry, max_abs_entry };
std::string to_string(RowReduction r);
RowReduction row_reduction_from_string(const std::string& name);

struct SignificanceMap {
  Eigen::VectorXd t;  // +inf where the folds agree exactly on a nonzero value
  double t_crit = 2.45;
  std::vector<bool> mask;  // t > t_crit

  std::vector<int> significant() const;
};

double reduce_row(const Eigen::RowVectorXd& row, RowReduction reduction);

// One-sample t-test across fold maps at every vertex.
SignificanceMap significance_map(const std::vector<Eigen::MatrixXd>& betas, double t_crit = 2.45,
                                 RowReduction reduction = RowReduction::signed_norm);

// Vertices whose cross-fold mean row norm exceeds `relative_threshold` times
// the largest such mean; empty when every map is zero. Sorted ascending.
std::vector<int> support_estimate(const std::vector<Eigen::MatrixXd>& betas, double relative_threshold = 0.1);

struct SweepPoint {
  std::string name;
  PipelineConfig config;
};

struct SweepRow {
  std::string config;
  int enc = 0, enc_t = 0, enc_r = 0;
  int fold = 0;
  double mse = 0.0, r2 = 0.0;
};

struct SweepSummary {
  std::string config;
  int enc = 0, enc_t = 0, enc_r = 0;
  double mean_mse = 0.0, se_mse = 0.0, mean_r2 = 0.0, se_r2 = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepSummary> summary;
  std::vector<CvResult> runs;
};

SweepResult sweep(const std::vector<SweepPoint>& grid, const std::vector<SubjectRecord>& subjects,
                  const GraphLaplacian& laplacian, const CvPlan& plan);

// CSV: config,enc,enc_t,enc_r,fold,mse,r2
void write_results_csv(std::ostream& out, const std::vector<SweepRow>& rows);
// CSV: config,enc,enc_t,enc_r,mse_mean,mse_se,r2_mean,r2_se
void write_summary_csv(std::ostream& out, const std::vector<SweepSummary>& rows);
// CSV: vertex,t,significant
void write_significance_csv(std::ostream& out, const SignificanceMap& map);

// Row/summary records for one CV run under the given configuration name.
std::vector<SweepRow> fold_rows(const std::string& name, const RepresentationSpec& spec, const CvResult& cv);
SweepSummary summarize(const std::string& name, const RepresentationSpec& spec, const CvResult& cv);

}  // namespace mvtrace
