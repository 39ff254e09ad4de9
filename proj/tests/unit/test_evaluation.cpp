#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "../support/oracles.hpp"
#include "mvtrace/error.hpp"
#include "mvtrace/evaluation.hpp"
#include "mvtrace/synth.hpp"

using namespace mvtrace;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("folds partition the subjects with balanced sizes") {
  const CvPlan plan = make_folds(40, 10, 3);
  REQUIRE(plan.folds.size() == 10);
  std::vector<int> all;
  for (int f = 0; f < 10; ++f) {
    CHECK(plan.test_indices(f).size() == 4);
    CHECK(plan.train_indices(f).size() == 36);
    CHECK(std::is_sorted(plan.folds[f].begin(), plan.folds[f].end()));
    std::vector<int> both = plan.test_indices(f);
    const std::vector<int> train = plan.train_indices(f);
    both.insert(both.end(), train.begin(), train.end());
    std::sort(both.begin(), both.end());
    std::vector<int> expected(40);
    std::iota(expected.begin(), expected.end(), 0);
    CHECK(both == expected);
    all.insert(all.end(), plan.folds[f].begin(), plan.folds[f].end());
  }
  CHECK(std::set<int>(all.begin(), all.end()).size() == 40);
}

TEST_CASE("property: fold sizes differ by at most one") {
  for (int n : {7, 23, 41})
    for (int k : {2, 3, 5, 7}) {
      const CvPlan plan = make_folds(n, k, static_cast<std::uint64_t>(n * k));
      std::size_t lo = n, hi = 0, total = 0;
      for (const auto& f : plan.folds) {
        lo = std::min(lo, f.size());
        hi = std::max(hi, f.size());
        total += f.size();
      }
      CHECK(hi - lo <= 1);
      CHECK(total == static_cast<std::size_t>(n));
    }
}

TEST_CASE("fold assignment depends only on the seed") {
  CHECK(make_folds(40, 10, 5).folds == make_folds(40, 10, 5).folds);
  CHECK(make_folds(40, 10, 5).folds != make_folds(40, 10, 6).folds);
  CHECK(fold_seed(1, 0) != fold_seed(1, 1));
  CHECK(fold_seed(1, 0) != fold_seed(2, 0));
  CHECK_THROWS_AS(make_folds(3, 4, 0), ConfigError);
  CHECK_THROWS_AS(make_folds(10, 1, 0), ConfigError);
}

TEST_CASE("metric examples") {
  const Eigen::VectorXd y = vec({1, 2, 3, 4});
  CHECK(r_squared(y, y) == 1.0);
  CHECK(r_squared(y, Eigen::VectorXd::Constant(4, 2.5)) == 0.0);
  // SS_res = 2.5, SS_tot = 5.
  CHECK(r_squared(y, vec({2.5, 2.5, 3, 4})) == 0.5);
  CHECK(r_squared(y, vec({-0.5, 2.5, 3, 4})) == 0.5);
  CHECK(mean_squared_error(y, y) == 0.0);
  CHECK(mean_squared_error(y, vec({2, 3, 4, 5})) == 1.0);
  CHECK(mean_squared_error(vec({0, 0}), vec({1, 3})) == 5.0);
  CHECK_THROWS_AS(r_squared(Eigen::VectorXd::Constant(3, 1.0), vec({1, 2, 3})), ValidationError);
}

TEST_CASE("property: r_squared matches the oracle and is affine invariant") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd y = oracle::random_matrix(15, 1, rng);
    const Eigen::VectorXd p = oracle::random_matrix(15, 1, rng);
    const double r2 = r_squared(y, p);
    CHECK(r2 == doctest::Approx(oracle::r_squared(to_std(y), to_std(p))).epsilon(1e-12));
    // Same affine map on truth and prediction leaves R^2 unchanged.
    const Eigen::VectorXd ya = (3.0 * y.array() - 7.0).matrix();
    const Eigen::VectorXd pa = (3.0 * p.array() - 7.0).matrix();
    CHECK(r_squared(ya, pa) == doctest::Approx(r2).epsilon(1e-10));
    CHECK(mean_squared_error(ya, pa) == doctest::Approx(9.0 * mean_squared_error(y, p)).epsilon(1e-12));
  }
}

TEST_CASE("mean and standard error") {
  const auto [m, se] = mean_and_se({1.0, 2.0, 3.0, 4.0});
  CHECK(m == 2.5);
  CHECK(se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(mean_and_se({4.0}).second == 0.0);
}

TEST_CASE("row reductions") {
  Eigen::RowVectorXd r(3);
  r << -3, 0, 4;
  CHECK(reduce_row(r, RowReduction::norm) == 5.0);
  CHECK(reduce_row(r, RowReduction::signed_norm) == 5.0);
  CHECK(reduce_row(-r, RowReduction::signed_norm) == -5.0);
  CHECK(reduce_row(r, RowReduction::mean_entry) == doctest::Approx(1.0 / 3.0));
  CHECK(reduce_row(r, RowReduction::max_abs_entry) == 4.0);
  for (RowReduction red : {RowReduction::signed_norm, RowReduction::norm, RowReduction::mean_entry,
                           RowReduction::max_abs_entry})
    CHECK(row_reduction_from_string(to_string(red)) == red);
}

TEST_CASE("significance map hand example") {
  // d = 1 so every reduction is the entry itself (up to sign for norm).
  std::vector<Eigen::MatrixXd> betas;
  const double col0[] = {1.0, 2.0, 3.0};
  for (double v : col0) {
    Eigen::MatrixXd b(3, 1);
    b << v, 0.0, 5.0;
    betas.push_back(b);
  }
  const SignificanceMap s = significance_map(betas, 2.45, RowReduction::mean_entry);
  // mean 2, sd 1, k 3: t = 2 sqrt(3)
  CHECK(s.t(0) == doctest::Approx(2.0 * std::sqrt(3.0)));
  CHECK(s.t(1) == 0.0);
  CHECK(std::isinf(s.t(2)));
  CHECK(s.mask == std::vector<bool>{true, false, true});
  CHECK(s.significant() == std::vector<int>{0, 2});
}

TEST_CASE("property: significance map is invariant to fold order") {
  std::mt19937_64 rng(21);
  std::vector<Eigen::MatrixXd> betas;
  for (int k = 0; k < 10; ++k) betas.push_back(oracle::random_matrix(20, 3, rng));
  std::vector<Eigen::MatrixXd> shuffled = betas;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  for (RowReduction red : {RowReduction::signed_norm, RowReduction::norm, RowReduction::mean_entry}) {
    const SignificanceMap a = significance_map(betas, 2.45, red);
    const SignificanceMap b = significance_map(shuffled, 2.45, red);
    CHECK((a.t - b.t).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(a.mask == b.mask);
  }
}

TEST_CASE("property: sign-symmetric null maps rarely cross the threshold") {
  // Under the null the signed reductions are symmetric around zero; with
  // t_crit 2.45 and 9 degrees of freedom the one-sided rate is about 2%.
  std::mt19937_64 rng(33);
  std::vector<Eigen::MatrixXd> betas;
  for (int k = 0; k < 10; ++k) betas.push_back(oracle::random_matrix(2000, 1, rng));
  const SignificanceMap s = significance_map(betas, 2.45, RowReduction::mean_entry);
  const double rate = static_cast<double>(s.significant().size()) / 2000.0;
  CHECK(rate < 0.04);
  CHECK(rate > 0.005);
}

TEST_CASE("support estimate keeps rows near the largest mean norm") {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4, 2);
  b.row(0) << 3, 4;
  b.row(2) << 0.3, 0.4;
  b.row(3) << 0.6, 0.8;
  CHECK(support_estimate({b, b}, 0.1) == std::vector<int>{0, 3});
  CHECK(support_estimate({b}, 0.05) == std::vector<int>{0, 2, 3});
  CHECK(support_estimate({Eigen::MatrixXd::Zero(4, 2)}).empty());
}

TEST_CASE("csv writers emit headers") {
  std::ostringstream a, b, c;
  write_results_csv(a, {SweepRow{"x", 4, 2, 2, 0, 0.5, 0.25}});
  CHECK(a.str().rfind("config,enc,enc_t,enc_r,fold,mse,r2\n", 0) == 0);
  write_summary_csv(b, {});
  CHECK(b.str() == "config,enc,enc_t,enc_r,mse_mean,mse_se,r2_mean,r2_se\n");
  SignificanceMap s;
  s.t = vec({1.0, 3.0});
  s.mask = {false, true};
  write_significance_csv(c, s);
  CHECK(c.str().rfind("vertex,t,significant\n", 0) == 0);
}

TEST_CASE("run_cv on raw features with a planted signal") {
  GeneratorConfig g;
  g.n_subjects = 30;
  g.mesh = "grid-6x6";
  g.d_task = 3;
  g.d_rest = 3;
  g.k_true = 2;
  g.n_clusters = 2;
  g.cluster_size = 4;
  g.seed = 4;
  const SyntheticDataset ds = generate(g);
  PipelineConfig p;
  p.representation.method = RepresentationMethod::passthrough;
  p.representation.views = ViewSelection::task;
  p.regularization.alpha = 1.0;
  p.regularization.eta = 0.5;
  p.seed = 1;
  const CvPlan plan = make_folds(30, 5, 1);
  const CvResult cv = run_cv(ds.subjects, build_laplacian(ds.mesh), p, plan);
  REQUIRE(cv.folds.size() == 5);
  CHECK(cv.latent_dim == 3);
  std::vector<int> seen;
  for (const FoldResult& f : cv.folds) {
    CHECK(f.test_subjects == plan.folds[static_cast<std::size_t>(f.fold_id)]);
    CHECK(f.mse == doctest::Approx(mean_squared_error(f.truth, f.predictions)));
    seen.insert(seen.end(), f.test_subjects.begin(), f.test_subjects.end());
  }
  CHECK(seen.size() == 30);
  CHECK(std::isfinite(cv.mean_mse));
  // Same config, same numbers.
  const CvResult again = run_cv(ds.subjects, build_laplacian(ds.mesh), p, plan);
  CHECK(again.mean_mse == cv.mean_mse);
  CHECK(again.folds[3].beta == cv.folds[3].beta);
}

TEST_CASE("parallel folds give the same result as sequential folds") {
  GeneratorConfig g;
  g.n_subjects = 20;
  g.mesh = "grid-5x5";
  g.d_task = 4;
  g.d_rest = 4;
  g.k_true = 2;
  g.n_clusters = 1;
  g.cluster_size = 4;
  const SyntheticDataset ds = generate(g);
  PipelineConfig p;
  p.representation.method = RepresentationMethod::pca;
  p.representation.enc = 2;
  p.regularization.alpha = 0.5;
  p.regularization.eta = 0.5;
  const CvPlan plan = make_folds(20, 4, 2);
  const CvResult seq = run_cv(ds.subjects, build_laplacian(ds.mesh), p, plan);
  p.jobs = 3;
  const CvResult par = run_cv(ds.subjects, build_laplacian(ds.mesh), p, plan);
  for (std::size_t f = 0; f < 4; ++f) CHECK(seq.folds[f].beta == par.folds[f].beta);
  CHECK(seq.mean_mse == par.mean_mse);
}
