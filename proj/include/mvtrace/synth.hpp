#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "mvtrace/mesh.hpp"
#include "mvtrace/subject.hpp"

namespace mvtrace {

// Planted multi-view generator. Every subject-vertex carries a shared latent
// factor h (k_true dims, spatially smoothed along the mesh) that both views
// observe through fixed loadings; the score is tr(beta_true^T H) + noise with
// beta_true supported on a few vertex clusters. Optional view-private factors
// add structured nuisance variance that carries no score information.
struct GeneratorConfig {
  int n_subjects = 40;
  std::string mesh = "icosphere-2";
  int d_task = 24;
  int d_rest = 30;
  int k_true = 4;
  int n_clusters = 3;
  int cluster_size = 8;
  double noise_sigma = 0.1;        // score noise sd, before standardisation
  double view_noise = 0.1;         // per-feature observation noise sd
  double smoothing = 1.0;          // lambda in (I + lambda L)^-1
  // When > 0: edges crossing a planted-cluster boundary are dropped from the
  // smoothing operator and edges inside a cluster use this weight instead of
  // `smoothing`, so each planted region carries a coherent latent signal that
  // is independent of its surroundings.
  double region_smoothing = 5.0;
  double beta_scale = 1.0;
  double rest_signal_weight = 1.0; // scales the rest view's shared loadings
  int task_private_dim = 0;
  double task_private_scale = 1.0;
  int rest_private_dim = 0;
  double rest_private_scale = 2.0;
  bool standardize_scores = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GroundTruth {
  Eigen::MatrixXd beta_true;      // m x k_true, zero off the support
  std::vector<int> support;       // sorted vertex indices
  std::vector<int> cluster_of;    // cluster id per entry of `support`
  Eigen::MatrixXd loadings_task;  // d_task x k_true
  Eigen::MatrixXd loadings_rest;  // d_rest x k_true
  double latent_scale = 1.0;      // multiplies smoothed white noise
};

struct SyntheticDataset {
  Mesh mesh;
  std::vector<SubjectRecord> subjects;
  GroundTruth truth;
  std::vector<Eigen::MatrixXd> latents;  // H_i, m x k_true
  Eigen::VectorXd raw_scores;            // before standardisation
};

// Draws spatially smooth fields (I + lambda L)^-1 W, W white, via conjugate
// gradients, scaled so entries have unit average variance.
class SmoothFieldSampler {
 public:
  SmoothFieldSampler(const GraphLaplacian& laplacian, double smoothing, std::uint64_t probe_seed);
  // Generic operator (I + sum_k lambda_k L_k) given directly; must be SPD.
  SmoothFieldSampler(Eigen::SparseMatrix<double> system, std::uint64_t probe_seed);

  Eigen::MatrixXd draw(Eigen::Index columns, std::mt19937_64& rng) const;
  Eigen::MatrixXd smooth(const Eigen::MatrixXd& white) const;
  double scale() const { return scale_; }

 private:
  Eigen::SparseMatrix<double> system_;
  double scale_ = 1.0;
};

SyntheticDataset generate(const GeneratorConfig& config);

enum class CorruptedView { task, rest };
enum class CorruptionMode { shuffle, noise };

// Destroys the information in one view while keeping its marginals:
// `shuffle` permutes that view across subjects, `noise` replaces it with
// Gaussian noise matching each feature's mean and sd.
std::vector<SubjectRecord> corrupt_view(const std::vector<SubjectRecord>& subjects, CorruptedView which,
                                        CorruptionMode mode, std::uint64_t seed);

}  // namespace mvtrace
