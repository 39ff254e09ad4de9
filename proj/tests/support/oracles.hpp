#pragma once

// Independent reference implementations used only by tests. None of these
// call into the library's numerical routines.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
  return m;
}

// Dense L = D - A from an undirected edge list (duplicates ignored).
inline Eigen::MatrixXd dense_laplacian(int m, const std::vector<std::pair<int, int>>& edges) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (auto [i, j] : edges) {
    a(i, j) = 1.0;
    a(j, i) = 1.0;
  }
  Eigen::MatrixXd l = -a;
  for (int i = 0; i < m; ++i) l(i, i) = a.row(i).sum();
  return l;
}

// Central finite differences of f at x.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                        double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    x(i) = xi + h;
    const double fp = f(x);
    x(i) = xi - h;
    const double fm = f(x);
    x(i) = xi;
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

// Trace-regression problem in flattened form: row i of X is vec(Z_i)
// (column-major), L the m x m Laplacian.
struct FlatProblem {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::MatrixXd laplacian;
  int m = 0, d = 0;
};

inline Eigen::VectorXd flatten(const Eigen::MatrixXd& beta) {
  return Eigen::Map<const Eigen::VectorXd>(beta.data(), beta.size());
}

inline Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, int m, int d) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), m, d);
}

inline double flat_objective(const FlatProblem& p, const Eigen::MatrixXd& beta, double alpha, double eta) {
  const Eigen::VectorXd r = p.y - p.x * flatten(beta);
  double penalty = 0.0;
  for (Eigen::Index j = 0; j < beta.rows(); ++j) penalty += beta.row(j).norm();
  return r.squaredNorm() + 0.5 * eta * (beta.transpose() * p.laplacian * beta).trace() + alpha * penalty;
}

// Closed-form least squares on the flattened design.
inline Eigen::MatrixXd least_squares(const FlatProblem& p) {
  const Eigen::VectorXd b = (p.x.transpose() * p.x).ldlt().solve(p.x.transpose() * p.y);
  return unflatten(b, p.m, p.d);
}

inline Eigen::MatrixXd block_soft_threshold(const Eigen::MatrixXd& v, double t) {
  Eigen::MatrixXd out = v;
  for (Eigen::Index j = 0; j < v.rows(); ++j) {
    const double n = v.row(j).norm();
    out.row(j) = n <= t ? Eigen::RowVectorXd::Zero(v.cols()).eval() : ((1.0 - t / n) * v.row(j)).eval();
  }
  return out;
}

// Proximal gradient without momentum, step 1/L with L from a dense
// eigendecomposition of the exact Hessian of the smooth part.
inline Eigen::MatrixXd plain_proximal_gradient(const FlatProblem& p, double alpha, double eta, int iterations) {
  const int md = p.m * p.d;
  Eigen::MatrixXd lap_kron = Eigen::MatrixXd::Zero(md, md);
  for (int k = 0; k < p.d; ++k) lap_kron.block(k * p.m, k * p.m, p.m, p.m) = p.laplacian;
  const Eigen::MatrixXd hessian = 2.0 * p.x.transpose() * p.x + eta * lap_kron;
  const double lip = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hessian).eigenvalues().maxCoeff();
  const double step = 1.0 / lip;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(md);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd grad = -2.0 * p.x.transpose() * (p.y - p.x * b) + eta * lap_kron * b;
    b = flatten(block_soft_threshold(unflatten(b - step * grad, p.m, p.d), step * alpha));
  }
  return unflatten(b, p.m, p.d);
}

// argmin_x 0.5 ||v - x||^2 + t ||x|| searched over x = s v / ||v||, s on a
// uniform grid of spacing `h` in [0, ||v||].
inline Eigen::RowVectorXd prox_brute_force(const Eigen::RowVectorXd& v, double t, double h = 1e-4) {
  const double n = v.norm();
  if (n == 0.0) return v;
  double best_s = 0.0, best = 0.5 * n * n;
  const long steps = static_cast<long>(std::ceil(n / h));
  for (long k = 1; k <= steps; ++k) {
    const double s = std::min(n, static_cast<double>(k) * h);
    const double f = 0.5 * (n - s) * (n - s) + t * s;
    if (f < best) {
      best = f;
      best_s = s;
    }
  }
  return (best_s / n) * v;
}

// 1 - SS_res / SS_tot written out directly.
inline double r_squared(const std::vector<double>& y, const std::vector<double>& yhat) {
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  return 1.0 - ss_res / ss_tot;
}

// Eigenvalues of the sample covariance (N - 1), descending.
inline Eigen::VectorXd covariance_eigenvalues(const Eigen::MatrixXd& data) {
  const Eigen::MatrixXd centred = data.rowwise() - data.colwise().mean();
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(data.rows() - 1);
  Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov).eigenvalues();
  std::sort(ev.data(), ev.data() + ev.size(), std::greater<double>());
  return ev;
}

// F1 of an estimated index set against the truth.
inline double f1_score(const std::vector<int>& estimate, const std::vector<int>& truth) {
  int tp = 0;
  for (int e : estimate) tp += std::count(truth.begin(), truth.end(), e) > 0 ? 1 : 0;
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(estimate.size());
  const double recall = static_cast<double>(tp) / static_cast<double>(truth.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace oracle
