#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "../support/oracles.hpp"
#include "mvtrace/error.hpp"
#include "mvtrace/mesh.hpp"
#include "mvtrace/trace_regression.hpp"

using namespace mvtrace;

namespace {

// Path graph 0-1-...-(m-1).
std::vector<std::pair<int, int>> path_edges(int m) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < m; ++i) e.emplace_back(i, i + 1);
  return e;
}

struct Instance {
  std::vector<Eigen::MatrixXd> latents;
  Eigen::VectorXd y;
  std::vector<std::pair<int, int>> edges;
  int m = 0, d = 0;

  RegressionDataset dataset() const { return RegressionDataset(latents, y, GraphLaplacian(m, edges)); }

  oracle::FlatProblem flat() const {
    oracle::FlatProblem p;
    p.m = m;
    p.d = d;
    p.y = y;
    p.laplacian = oracle::dense_laplacian(m, edges);
    p.x.resize(static_cast<Eigen::Index>(latents.size()), m * d);
    for (std::size_t i = 0; i < latents.size(); ++i)
      p.x.row(static_cast<Eigen::Index>(i)) = oracle::flatten(latents[i]).transpose();
    return p;
  }
};

Instance random_instance(int n, int m, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Instance in;
  in.m = m;
  in.d = d;
  in.edges = path_edges(m);
  // A few random chords so the graph is not always a path.
  std::uniform_int_distribution<int> pick(0, m - 1);
  for (int k = 0; k < m / 3; ++k) {
    const int a = pick(rng), b = pick(rng);
    if (a != b) in.edges.emplace_back(std::min(a, b), std::max(a, b));
  }
  Eigen::MatrixXd beta = oracle::random_matrix(m, d, rng);
  for (int j = 0; j < m; j += 2) beta.row(j).setZero();
  in.y.resize(n);
  for (int i = 0; i < n; ++i) {
    in.latents.push_back(oracle::random_matrix(m, d, rng));
    in.y(i) = (beta.array() * in.latents.back().array()).sum() + 0.1 * oracle::random_matrix(1, 1, rng)(0, 0);
  }
  return in;
}

}  // namespace

TEST_CASE("predict is the Frobenius inner product") {
  Eigen::MatrixXd b(2, 2), z(2, 2);
  b << 1, 2, 3, 4;
  z << 5, 6, 7, 8;
  CHECK(predict(b, z) == 70.0);
  CHECK(predict(b, z) == doctest::Approx((b.transpose() * z).trace()));
}

TEST_CASE("objective pieces on a hand example") {
  // One subject, m = 2 (one edge), d = 1.
  Eigen::MatrixXd z(2, 1);
  z << 1, 2;
  Eigen::VectorXd y(1);
  y << 3;
  const RegressionDataset data({z}, y, GraphLaplacian(2, {{0, 1}}));
  Eigen::MatrixXd beta(2, 1);
  beta << 1, -1;
  // residual 3 - (1 - 2) = 4; tr(b^T L b) = (1 - (-1))^2 = 4
  CHECK(smooth_objective(beta, data, 0.0) == 16.0);
  CHECK(smooth_objective(beta, data, 1.0) == 18.0);
  CHECK(group_penalty(beta, GroupPenalty::norm) == 2.0);
  CHECK(group_penalty(beta, GroupPenalty::squared_norm) == 2.0);
  RegularizationConfig reg;
  reg.alpha = 0.5;
  reg.eta = 1.0;
  CHECK(objective(beta, data, reg) == 19.0);
}

TEST_CASE("smooth gradient matches central differences") {
  const Instance in = random_instance(12, 6, 3, 1);
  const RegressionDataset data = in.dataset();
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd beta = oracle::random_matrix(6, 3, rng);
  const double eta = 0.7;
  const Eigen::VectorXd numeric = oracle::numeric_gradient(
      [&](const Eigen::VectorXd& v) { return smooth_objective(oracle::unflatten(v, 6, 3), data, eta); },
      oracle::flatten(beta));
  CHECK(oracle::relative_error(oracle::flatten(smooth_gradient(beta, data, eta)), numeric) < 1e-7);
}

TEST_CASE("prox_group examples") {
  Eigen::MatrixXd v(3, 2);
  v << 3, 4, 0.3, 0.4, 0, 0;
  const Eigen::MatrixXd p = prox_group(v, 1.0);
  CHECK(p(0, 0) == doctest::Approx(2.4));
  CHECK(p(0, 1) == doctest::Approx(3.2));
  CHECK(p.row(1).norm() == 0.0);
  CHECK(p.row(2).norm() == 0.0);
  CHECK(prox_group(v, 0.0) == v);
  CHECK_THROWS_AS(prox_group(v, -1.0), ValidationError);
}

TEST_CASE("property: prox_group agrees with a brute-force minimiser") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> thr(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd v = oracle::random_matrix(4, 3, rng);
    const double t = thr(rng);
    const Eigen::MatrixXd p = prox_group(v, t);
    for (Eigen::Index j = 0; j < v.rows(); ++j)
      CHECK((p.row(j) - oracle::prox_brute_force(v.row(j), t)).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("prox of the squared penalty is uniform shrinkage") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd v = oracle::random_matrix(5, 2, rng);
  // argmin 0.5 ||v - x||^2 + t ||x||^2 = v / (1 + 2t)
  CHECK((prox_group_squared(v, 0.5) - v / 2.0).norm() < 1e-14);
}

TEST_CASE("lipschitz estimate bounds the exact constant from above") {
  const Instance in = random_instance(20, 7, 2, 5);
  const oracle::FlatProblem p = in.flat();
  const int md = p.m * p.d;
  Eigen::MatrixXd lap_kron = Eigen::MatrixXd::Zero(md, md);
  for (int k = 0; k < p.d; ++k) lap_kron.block(k * p.m, k * p.m, p.m, p.m) = p.laplacian;
  const double eta = 0.3;
  const Eigen::MatrixXd hessian = 2.0 * p.x.transpose() * p.x + eta * lap_kron;
  const double exact = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hessian).eigenvalues().maxCoeff();
  const double est = lipschitz_estimate(in.dataset(), eta, 100, 0);
  CHECK(est >= exact * (1.0 - 1e-6));
  CHECK(est <= 3.0 * exact);
}

TEST_CASE("property: MFISTA objective never increases") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance in = random_instance(30, 8, 3, 100 + seed);
    RegularizationConfig reg;
    reg.alpha = 0.5 + static_cast<double>(seed);
    reg.eta = 0.2 * static_cast<double>(seed);
    FistaConfig fista;
    fista.max_iters = 300;
    const FitResult fit = fit_mfista(in.dataset(), reg, fista);
    for (std::size_t k = 1; k < fit.objective_trace.size(); ++k)
      CHECK(fit.objective_trace[k] <= fit.objective_trace[k - 1]);
  }
}

TEST_CASE("MFISTA with backtracking is also monotone and reaches the same optimum") {
  const Instance in = random_instance(25, 6, 2, 7);
  RegularizationConfig reg;
  reg.alpha = 2.0;
  reg.eta = 1.0;
  FistaConfig fixed, bt;
  fixed.max_iters = bt.max_iters = 5000;
  fixed.rel_tolerance = bt.rel_tolerance = 1e-13;
  bt.step_policy = StepPolicy::backtracking;
  const FitResult a = fit_mfista(in.dataset(), reg, fixed);
  const FitResult b = fit_mfista(in.dataset(), reg, bt);
  for (std::size_t k = 1; k < b.objective_trace.size(); ++k)
    CHECK(b.objective_trace[k] <= b.objective_trace[k - 1]);
  CHECK(a.objective_trace.back() == doctest::Approx(b.objective_trace.back()).epsilon(1e-8));
}

TEST_CASE("MFISTA matches plain proximal gradient") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Instance in = random_instance(30, 6, 2, 200 + seed);
    RegularizationConfig reg;
    reg.alpha = 1.5;
    reg.eta = 0.5;
    FistaConfig fista;
    fista.max_iters = 20000;
    fista.rel_tolerance = 1e-15;
    const FitResult fit = fit_mfista(in.dataset(), reg, fista);
    const oracle::FlatProblem p = in.flat();
    const Eigen::MatrixXd ref = oracle::plain_proximal_gradient(p, reg.alpha, reg.eta, 50000);
    const double f_ref = oracle::flat_objective(p, ref, reg.alpha, reg.eta);
    CHECK(std::abs(objective(fit.beta, in.dataset(), reg) - f_ref) <= 1e-8 * std::max(1.0, std::abs(f_ref)));
  }
}

TEST_CASE("unregularised fit equals closed-form least squares") {
  const Instance in = random_instance(40, 5, 3, 9);
  RegularizationConfig reg;
  reg.alpha = 0.0;
  reg.eta = 0.0;
  FistaConfig fista;
  fista.max_iters = 50000;
  fista.rel_tolerance = 1e-16;
  const FitResult fit = fit_mfista(in.dataset(), reg, fista);
  const Eigen::MatrixXd ls = oracle::least_squares(in.flat());
  CHECK((fit.beta - ls).norm() / ls.norm() < 1e-6);
}

TEST_CASE("the solution is a fixed point of the proximal gradient map") {
  const Instance in = random_instance(30, 8, 2, 11);
  const RegressionDataset data = in.dataset();
  RegularizationConfig reg;
  reg.alpha = 3.0;
  reg.eta = 0.5;
  FistaConfig fista;
  fista.max_iters = 20000;
  fista.rel_tolerance = 1e-15;
  const FitResult fit = fit_mfista(data, reg, fista);
  const double step = 1.0 / lipschitz_estimate(data, reg.eta, 100, 0);
  const Eigen::MatrixXd next = prox_group(fit.beta - step * smooth_gradient(fit.beta, data, reg.eta), step * reg.alpha);
  CHECK((next - fit.beta).norm() < 1e-6 * std::max(1.0, fit.beta.norm()));
}

TEST_CASE("property: support shrinks as alpha grows") {
  const Instance in = random_instance(30, 10, 2, 13);
  std::size_t previous = 11;
  for (double alpha : {0.1, 1.0, 5.0, 20.0, 80.0}) {
    RegularizationConfig reg;
    reg.alpha = alpha;
    reg.eta = 0.0;
    FistaConfig fista;
    fista.max_iters = 5000;
    fista.rel_tolerance = 1e-12;
    const std::size_t rows = nonzero_rows(fit_mfista(in.dataset(), reg, fista).beta).size();
    CHECK(rows <= previous);
    previous = rows;
  }
  // Above max_j ||grad_j(0)|| the zero matrix is optimal.
  const RegressionDataset data = in.dataset();
  const Eigen::MatrixXd g0 = smooth_gradient(Eigen::MatrixXd::Zero(10, 2), data, 0.0);
  RegularizationConfig reg;
  reg.alpha = 1.01 * g0.rowwise().norm().maxCoeff();
  reg.eta = 0.0;
  CHECK(nonzero_rows(fit_mfista(data, reg, FistaConfig{}).beta).empty());
}

TEST_CASE("recovers a planted row support") {
  std::mt19937_64 rng(17);
  const int n = 60, m = 12, d = 2;
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(m, d);
  beta.row(2) << 2, -1;
  beta.row(7) << -1.5, 1;
  std::vector<Eigen::MatrixXd> z;
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    z.push_back(oracle::random_matrix(m, d, rng));
    y(i) = predict(beta, z.back()) + 0.05 * oracle::random_matrix(1, 1, rng)(0, 0);
  }
  RegularizationConfig reg;
  reg.alpha = 10.0;
  reg.eta = 0.0;
  const FitResult fit = fit_mfista(RegressionDataset(z, y, GraphLaplacian(m, path_edges(m))), reg, FistaConfig{});
  CHECK(nonzero_rows(fit.beta, 1e-8) == std::vector<int>{2, 7});
}

TEST_CASE("warm start from the optimum stays there") {
  const Instance in = random_instance(20, 5, 2, 19);
  RegularizationConfig reg;
  reg.alpha = 1.0;
  reg.eta = 0.5;
  FistaConfig fista;
  fista.max_iters = 20000;
  fista.rel_tolerance = 1e-15;
  const FitResult cold = fit_mfista(in.dataset(), reg, fista);
  const FitResult warm = fit_mfista(in.dataset(), reg, fista, cold.beta);
  CHECK(warm.objective_trace.back() <= cold.objective_trace.back());
  CHECK(warm.objective_trace.front() == doctest::Approx(cold.objective_trace.back()));
}

TEST_CASE("invalid inputs are rejected") {
  RegularizationConfig reg;
  reg.alpha = -1.0;
  CHECK_THROWS_AS(reg.validate(), ConfigError);
  FistaConfig fista;
  fista.max_iters = 0;
  CHECK_THROWS_AS(fista.validate(), ConfigError);
  Eigen::VectorXd y(2);
  y << 1, 2;
  CHECK_THROWS_AS(RegressionDataset({Eigen::MatrixXd::Zero(3, 2)}, y, GraphLaplacian(3, {})), ShapeError);
  CHECK_THROWS_AS(RegressionDataset({Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(4, 2)}, y,
                                    GraphLaplacian(3, {})),
                  ShapeError);
}

TEST_CASE("sidecar lists nonzero rows with their norms") {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 2);
  b.row(1) << 3, 4;
  std::ostringstream out;
  write_beta_sidecar(out, b);
  CHECK(out.str().find("1 5") != std::string::npos);
  CHECK(out.str().find("0 ") == std::string::npos);
}
