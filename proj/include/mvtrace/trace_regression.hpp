#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "mvtrace/mesh.hpp"

namespace mvtrace {

// Penalty on the per-vertex rows of beta: sum_j ||beta_j||_2 (group lasso)
// or sum_j ||beta_j||_2^2.
enum class GroupPenalty { norm, squared_norm };

struct RegularizationConfig {
  double alpha = 5e-4;  // row-group weight
  double eta = 1e-3;    // Laplacian weight
  GroupPenalty penalty = GroupPenalty::norm;

  void validate() const;
};

enum class StepPolicy { fixed_from_lipschitz, backtracking };

struct FistaConfig {
  int max_iters = 2000;
  double rel_tolerance = 1e-8;  // on objective decrease over `window` iterations
  int window = 10;
  StepPolicy step_policy = StepPolicy::fixed_from_lipschitz;
  double backtracking_growth = 2.0;
  int power_iterations = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

// n subjects, each an m x d latent matrix, with scalar targets. The design
// is stored flattened: row i is vec(Z_i) in column-major order.
class RegressionDataset {
 public:
  RegressionDataset(const std::vector<Eigen::MatrixXd>& latents, Eigen::VectorXd targets,
                    GraphLaplacian laplacian);

  Eigen::Index subjects() const { return design_.rows(); }
  Eigen::Index vertices() const { return m_; }
  Eigen::Index latent_dim() const { return d_; }
  const Eigen::MatrixXd& design() const { return design_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const GraphLaplacian& laplacian() const { return laplacian_; }

  // tr(beta^T Z_i) for every subject.
  Eigen::VectorXd predictions(const Eigen::MatrixXd& beta) const;

 private:
  Eigen::Index m_, d_;
  Eigen::MatrixXd design_;
  Eigen::VectorXd targets_;
  GraphLaplacian laplacian_;
};

// tr(beta^T Z) = sum_jk beta_jk Z_jk.
double predict(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& latent);

// Smooth part: sum_i (y_i - tr(beta^T Z_i))^2 + (eta / 2) tr(beta^T L beta).
double smooth_objective(const Eigen::MatrixXd& beta, const RegressionDataset& data, double eta);
double group_penalty(const Eigen::MatrixXd& beta, GroupPenalty penalty);
// Full objective: smooth part + alpha * group penalty.
double objective(const Eigen::MatrixXd& beta, const RegressionDataset& data, const RegularizationConfig& reg);

// -2 sum_i (y_i - tr(beta^T Z_i)) Z_i + eta L beta.
Eigen::MatrixXd smooth_gradient(const Eigen::MatrixXd& beta, const RegressionDataset& data, double eta);

// Row-wise block soft-thresholding, the prox of threshold * sum_j ||row_j||_2.
Eigen::MatrixXd prox_group(const Eigen::MatrixXd& beta, double threshold);
// Prox of threshold * sum_j ||row_j||_2^2 (uniform shrinkage).
Eigen::MatrixXd prox_group_squared(const Eigen::MatrixXd& beta, double threshold);
Eigen::MatrixXd prox_penalty(const Eigen::MatrixXd& beta, double threshold, GroupPenalty penalty);

// Upper estimate of the gradient Lipschitz constant,
// 2 lambda_max(X^T X) + eta lambda_max(L), by seeded power iteration.
double lipschitz_estimate(const RegressionDataset& data, double eta, int iterations, std::uint64_t seed);

struct FitResult {
  Eigen::MatrixXd beta;
  std::vector<double> objective_trace;  // objective at the initial point, then after every iteration
  int iterations = 0;
  bool converged = false;
  double step = 0.0;  // last step size used
};

// Monotone FISTA. Each iteration takes a proximal gradient step from the
// momentum point and keeps the candidate only if it does not increase the
// objective; otherwise the incumbent is retained while the momentum point is
// still moved towards the candidate. A zero matrix is used when `init` is empty.
FitResult fit_mfista(const RegressionDataset& data, const RegularizationConfig& reg, const FistaConfig& fista,
                     const Eigen::MatrixXd& init = Eigen::MatrixXd());

// Row indices whose Euclidean norm exceeds `tolerance`.
std::vector<int> nonzero_rows(const Eigen::MatrixXd& beta, double tolerance = 0.0);

// Sidecar text for a BetaMap file: "vertex norm" per nonzero row.
void write_beta_sidecar(std::ostream& out, const Eigen::MatrixXd& beta);

}  // namespace mvtrace
