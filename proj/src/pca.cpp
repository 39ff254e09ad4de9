#include "mvtrace/pca.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/SVD>
#include <spdlog/spdlog.h>

#include "mvtrace/error.hpp"

namespace mvtrace {

PcaModel fit_pca(const Eigen::MatrixXd& data, Eigen::Index enc, const PcaOptions& options) {
  const Eigen::Index n = data.rows(), d = data.cols();
  if (n < 2) throw ValidationError("PCA needs at least two samples");
  if (enc < 1 || enc > std::min(n, d)) {
    throw ValidationError("PCA encoding dimension " + std::to_string(enc) + " exceeds min(N, D) = " +
                          std::to_string(std::min(n, d)));
  }

  Eigen::MatrixXd sample;
  const Eigen::MatrixXd* source = &data;
  if (n > options.max_rows) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::mt19937_64 rng(options.seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(options.max_rows));
    std::sort(idx.begin(), idx.end());
    sample.resize(options.max_rows, d);
    for (Eigen::Index r = 0; r < options.max_rows; ++r) sample.row(r) = data.row(idx[static_cast<std::size_t>(r)]);
    source = &sample;
  }

  PcaModel model;
  model.mean = source->colwise().mean().transpose();
  const Eigen::MatrixXd centered = source->rowwise() - model.mean.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();

  model.components = svd.matrixV().leftCols(enc).transpose();
  for (Eigen::Index k = 0; k < enc; ++k) {
    Eigen::Index arg = 0;
    model.components.row(k).cwiseAbs().maxCoeff(&arg);
    if (model.components(k, arg) < 0) model.components.row(k) *= -1.0;
  }
  model.explained_variance = s.head(enc).cwiseAbs2() / static_cast<double>(source->rows() - 1);
  if (s(enc - 1) <= 1e-12 * std::max(1.0, s(0))) {
    spdlog::warn("PCA: data is rank deficient for {} components", enc);
  }
  return model;
}

Eigen::VectorXd pca_encode(const PcaModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.input_dim()) throw ShapeError("pca_encode: input dimension mismatch");
  return model.components * (x - model.mean);
}

Eigen::MatrixXd pca_encode_rows(const PcaModel& model, const Eigen::MatrixXd& data) {
  if (data.cols() != model.input_dim()) throw ShapeError("pca_encode: input dimension mismatch");
  return (data.rowwise() - model.mean.transpose()) * model.components.transpose();
}

Eigen::MatrixXd pca_decode_rows(const PcaModel& model, const Eigen::MatrixXd& codes) {
  if (codes.cols() != model.enc()) throw ShapeError("pca_decode: code dimension mismatch");
  Eigen::MatrixXd out = codes * model.components;
  out.rowwise() += model.mean.transpose();
  return out;
}

double pca_reconstruction_mse(const PcaModel& model, const Eigen::MatrixXd& data) {
  const Eigen::MatrixXd recon = pca_decode_rows(model, pca_encode_rows(model, data));
  return (recon - data).squaredNorm() / static_cast<double>(data.size());
}

}  // namespace mvtrace
