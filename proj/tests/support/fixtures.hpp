#pragma once

// Test-only helpers over library types.

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mvtrace/nn.hpp"

namespace fixture {

// Every weight then bias of every layer, in layer order.
inline Eigen::VectorXd flatten_params(const mvtrace::Mlp& mlp) {
  std::vector<double> v;
  for (const auto& l : mlp.layers()) {
    v.insert(v.end(), l.weights.data(), l.weights.data() + l.weights.size());
    v.insert(v.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline void set_params(mvtrace::Mlp& mlp, const Eigen::VectorXd& p) {
  Eigen::Index k = 0;
  for (auto& l : mlp.layers()) {
    for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = p(k++);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = p(k++);
  }
}

inline Eigen::VectorXd flatten_grads(const mvtrace::Gradients& g) {
  std::vector<double> v;
  for (const auto& l : g) {
    v.insert(v.end(), l.weights.data(), l.weights.data() + l.weights.size());
    v.insert(v.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Glorot weights with N(0, 0.5) biases. Zero biases put every pre-activation
// of a sample whose ReLU inputs are all off exactly on the kink, where finite
// differences are meaningless.
inline mvtrace::Mlp random_mlp(const std::vector<int>& dims, mvtrace::Activation hidden,
                               mvtrace::Activation output, std::mt19937_64& rng) {
  mvtrace::Mlp mlp = mvtrace::Mlp::glorot(dims, hidden, output, rng);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (auto& l : mlp.layers())
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = normal(rng);
  return mlp;
}

// N samples lying exactly in a random k-dimensional subspace of R^D, plus
// isotropic noise of standard deviation `noise`.
inline Eigen::MatrixXd subspace_data(int n, int dim, int k, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd basis(k, dim), coeff(n, k), x(n, dim);
  for (Eigen::Index i = 0; i < basis.size(); ++i) basis.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < coeff.size(); ++i) coeff.data()[i] = normal(rng);
  x = coeff * basis;
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += noise * normal(rng);
  return x;
}

}  // namespace fixture
