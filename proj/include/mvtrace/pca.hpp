#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace mvtrace {

struct PcaModel {
  Eigen::VectorXd mean;                // D
  Eigen::MatrixXd components;          // enc x D, orthonormal rows
  Eigen::VectorXd explained_variance;  // enc, nonincreasing, unbiased (N - 1)

  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index enc() const { return components.rows(); }
};

struct PcaOptions {
  // Larger inputs are fitted on a seeded row subsample of this size.
  Eigen::Index max_rows = 200000;
  std::uint64_t seed = 0;
};

// Top-`enc` principal directions of `data` (rows are samples) by thin SVD.
// Each component is signed so that its largest-magnitude entry is positive.
PcaModel fit_pca(const Eigen::MatrixXd& data, Eigen::Index enc, const PcaOptions& options = {});

Eigen::VectorXd pca_encode(const PcaModel& model, const Eigen::VectorXd& x);
// Row-wise encoding of an N x D block.
Eigen::MatrixXd pca_encode_rows(const PcaModel& model, const Eigen::MatrixXd& data);
Eigen::MatrixXd pca_decode_rows(const PcaModel& model, const Eigen::MatrixXd& codes);

// Mean over every entry of the squared reconstruction residual.
double pca_reconstruction_mse(const PcaModel& model, const Eigen::MatrixXd& data);

}  // namespace mvtrace
