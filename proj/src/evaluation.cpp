#include "mvtrace/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "mvtrace/error.hpp"

namespace mvtrace {

std::vector<int> CvPlan::test_indices(int fold) const { return folds.at(static_cast<std::size_t>(fold)); }

std::vector<int> CvPlan::train_indices(int fold) const {
  const auto& test = folds.at(static_cast<std::size_t>(fold));
  std::vector<int> train;
  train.reserve(static_cast<std::size_t>(n_subjects) - test.size());
  for (int i = 0; i < n_subjects; ++i) {
    if (!std::binary_search(test.begin(), test.end(), i)) train.push_back(i);
  }
  return train;
}

CvPlan make_folds(int n, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("folds", "need at least 2 folds");
  if (k > n) throw ConfigError("folds", "more folds (" + std::to_string(k) + ") than subjects (" + std::to_string(n) + ")");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  CvPlan plan{n, k, seed, std::vector<std::vector<int>>(static_cast<std::size_t>(k))};
  for (std::size_t i = 0; i < order.size(); ++i) plan.folds[i % static_cast<std::size_t>(k)].push_back(order[i]);
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

double mean_squared_error(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  if (y_true.size() != y_pred.size()) throw ShapeError("mean_squared_error: length mismatch");
  if (y_true.size() == 0) throw ValidationError("mean_squared_error: empty input");
  return (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size());
}

double r_squared(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  if (y_true.size() != y_pred.size()) throw ShapeError("r_squared: length mismatch");
  if (y_true.size() < 2) throw ValidationError("r_squared needs at least two samples");
  const double mean = y_true.mean();
  const double total = (y_true.array() - mean).square().sum();
  if (total == 0.0) throw ValidationError("r_squared undefined: y_true is constant");
  return 1.0 - (y_true - y_pred).squaredNorm() / total;
}

std::pair<double, double> mean_and_se(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t fold_seed(std::uint64_t seed, int fold) {
  return splitmix(seed ^ splitmix(static_cast<std::uint64_t>(fold) + 1));
}

namespace {

template <typename T>
std::vector<T> pick(const std::vector<T>& all, const std::vector<int>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(all[static_cast<std::size_t>(i)]);
  return out;
}

Eigen::VectorXd pick(const Eigen::VectorXd& all, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = all(idx[k]);
  return out;
}

// Runs body(i) for i in [0, count) on up to `jobs` threads; the first
// exception (by index) is rethrown.
template <typename Body>
void parallel_for(int count, int jobs, Body&& body) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(jobs, count);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

RegularizationConfig inner_search(const std::vector<Eigen::MatrixXd>& latents, const Eigen::VectorXd& y,
                                  const GraphLaplacian& lap, const PipelineConfig& config, std::uint64_t seed) {
  const std::vector<double> alphas =
      config.inner.alpha_grid.empty() ? std::vector<double>{config.regularization.alpha} : config.inner.alpha_grid;
  const std::vector<double> etas =
      config.inner.eta_grid.empty() ? std::vector<double>{config.regularization.eta} : config.inner.eta_grid;
  const int n = static_cast<int>(latents.size());
  const CvPlan inner = make_folds(n, std::min(config.inner.folds, n), seed);

  RegularizationConfig best = config.regularization;
  double best_mse = std::numeric_limits<double>::infinity();
  for (double eta : etas) {
    for (double alpha : alphas) {
      RegularizationConfig reg = config.regularization;
      reg.alpha = alpha;
      reg.eta = eta;
      double total = 0.0;
      for (int f = 0; f < inner.n_folds; ++f) {
        const auto tr = inner.train_indices(f), te = inner.test_indices(f);
        const RegressionDataset ds(pick(latents, tr), pick(y, tr), lap);
        FistaConfig fista = config.fista;
        fista.seed = seed;
        const FitResult fit = fit_mfista(ds, reg, fista);
        for (int i : te) {
          const double r = y(i) - predict(fit.beta, latents[static_cast<std::size_t>(i)]);
          total += r * r;
        }
      }
      const double mse = total / n;
      spdlog::debug("inner search alpha={} eta={} mse={}", alpha, eta, mse);
      if (mse < best_mse) {
        best_mse = mse;
        best = reg;
      }
    }
  }
  return best;
}

}  // namespace

CvResult run_cv(const std::vector<SubjectRecord>& subjects, const GraphLaplacian& laplacian,
                const PipelineConfig& config, const CvPlan& plan) {
  validate_subjects(subjects);
  if (plan.n_subjects != static_cast<int>(subjects.size())) {
    throw ValidationError("CV plan was built for a different number of subjects");
  }
  if (subjects.front().vertex_count() != laplacian.dimension()) {
    throw ShapeError("subjects have " + std::to_string(subjects.front().vertex_count()) +
                     " vertices, Laplacian has " + std::to_string(laplacian.dimension()));
  }
  config.regularization.validate();
  config.fista.validate();

  Eigen::VectorXd y(static_cast<Eigen::Index>(subjects.size()));
  for (std::size_t i = 0; i < subjects.size(); ++i) y(static_cast<Eigen::Index>(i)) = subjects[i].score;

  CvResult result;
  result.folds.resize(static_cast<std::size_t>(plan.n_folds));
  parallel_for(plan.n_folds, config.jobs, [&](int f) {
    const std::uint64_t seed = fold_seed(config.seed, f);
    const std::vector<int> train = plan.train_indices(f), test = plan.test_indices(f);

    std::shared_ptr<const Representation> rep =
        fit_representation(config.representation, stack_vertices(subjects, train), seed);
    std::vector<Eigen::MatrixXd> latents;
    latents.reserve(subjects.size());
    for (const auto& s : subjects) latents.push_back(rep->encode_subject(s));

    const std::vector<Eigen::MatrixXd> train_latents = pick(latents, train);
    const Eigen::VectorXd train_y = pick(y, train);
    RegularizationConfig reg = config.regularization;
    if (config.inner.enabled()) reg = inner_search(train_latents, train_y, laplacian, config, seed);

    FistaConfig fista = config.fista;
    fista.seed = seed;
    const RegressionDataset ds(train_latents, train_y, laplacian);
    FitResult fit = fit_mfista(ds, reg, fista);

    FoldResult& fr = result.folds[static_cast<std::size_t>(f)];
    fr.fold_id = f;
    fr.test_subjects = test;
    fr.truth = pick(y, test);
    fr.predictions.resize(static_cast<Eigen::Index>(test.size()));
    for (std::size_t k = 0; k < test.size(); ++k) {
      fr.predictions(static_cast<Eigen::Index>(k)) = predict(fit.beta, latents[static_cast<std::size_t>(test[k])]);
    }
    fr.mse = mean_squared_error(fr.truth, fr.predictions);
    fr.r2 = r_squared(fr.truth, fr.predictions);
    fr.beta = std::move(fit.beta);
    fr.objective_trace = std::move(fit.objective_trace);
    fr.converged = fit.converged;
    fr.alpha = reg.alpha;
    fr.eta = reg.eta;
    if (config.keep_representations) fr.representation = rep;
    spdlog::info("fold {}/{}: mse={:.4g} r2={:.4g} iters={}", f + 1, plan.n_folds, fr.mse, fr.r2,
                 fr.objective_trace.size() - 1);
  });

  std::vector<double> mses, r2s;
  Eigen::VectorXd all_true(static_cast<Eigen::Index>(subjects.size())), all_pred(all_true.size());
  Eigen::Index at = 0;
  for (const auto& fr : result.folds) {
    mses.push_back(fr.mse);
    r2s.push_back(fr.r2);
    all_true.segment(at, fr.truth.size()) = fr.truth;
    all_pred.segment(at, fr.predictions.size()) = fr.predictions;
    at += fr.truth.size();
  }
  std::tie(result.mean_mse, result.se_mse) = mean_and_se(mses);
  std::tie(result.mean_r2, result.se_r2) = mean_and_se(r2s);
  result.pooled_r2 = r_squared(all_true, all_pred);
  result.latent_dim = static_cast<int>(result.folds.front().beta.cols());
  return result;
}

std::string to_string(RowReduction r) {
  switch (r) {
    case RowReduction::signed_norm: return "signed-norm";
    case RowReduction::norm: return "norm";
    case RowReduction::mean_entry: return "mean-entry";
    case RowReduction::max_abs_entry: return "max-abs-entry";
  }
  return "unknown";
}

RowReduction row_reduction_from_string(const std::string& name) {
  if (name == "signed-norm") return RowReduction::signed_norm;
  if (name == "norm") return RowReduction::norm;
  if (name == "mean-entry") return RowReduction::mean_entry;
  if (name == "max-abs-entry") return RowReduction::max_abs_entry;
  throw ConfigError("reduction", "unknown row reduction '" + name + "'");
}

double reduce_row(const Eigen::RowVectorXd& row, RowReduction reduction) {
  switch (reduction) {
    case RowReduction::signed_norm: {
      const double mean = row.mean();
      return mean < 0 ? -row.norm() : row.norm();
    }
    case RowReduction::norm: return row.norm();
    case RowReduction::mean_entry: return row.mean();
    case RowReduction::max_abs_entry: {
      Eigen::Index arg = 0;
      row.cwiseAbs().maxCoeff(&arg);
      return row(arg);
    }
  }
  return 0.0;
}

std::vector<int> SignificanceMap::significant() const {
  std::vector<int> out;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (mask[j]) out.push_back(static_cast<int>(j));
  }
  return out;
}

SignificanceMap significance_map(const std::vector<Eigen::MatrixXd>& betas, double t_crit, RowReduction reduction) {
  if (betas.size() < 2) throw ValidationError("significance map needs at least two fold maps");
  const Eigen::Index m = betas.front().rows(), d = betas.front().cols();
  for (const auto& b : betas) {
    if (b.rows() != m || b.cols() != d) throw ShapeError("fold maps must share one shape");
  }
  const double k = static_cast<double>(betas.size());
  SignificanceMap map;
  map.t_crit = t_crit;
  map.t.resize(m);
  map.mask.resize(static_cast<std::size_t>(m));
  std::vector<double> s(betas.size());
  for (Eigen::Index j = 0; j < m; ++j) {
    for (std::size_t f = 0; f < betas.size(); ++f) s[f] = reduce_row(betas[f].row(j), reduction);
    // Sorting makes the sums independent of fold order.
    std::sort(s.begin(), s.end());
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / k;
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (k - 1.0));
    double t = 0.0;
    if (sd > 0.0) t = mean / (sd / std::sqrt(k));
    else if (mean != 0.0) t = std::numeric_limits<double>::infinity();
    map.t(j) = t;
    map.mask[static_cast<std::size_t>(j)] = t > t_crit;
  }
  return map;
}

std::vector<int> support_estimate(const std::vector<Eigen::MatrixXd>& betas, double relative_threshold) {
  if (betas.empty()) throw ValidationError("support estimate needs at least one fold map");
  const Eigen::Index m = betas.front().rows();
  for (const auto& b : betas) {
    if (b.rows() != m || b.cols() != betas.front().cols()) throw ShapeError("fold maps must share one shape");
  }
  Eigen::VectorXd mean_norm(m);
  std::vector<double> norms(betas.size());
  for (Eigen::Index j = 0; j < m; ++j) {
    for (std::size_t f = 0; f < betas.size(); ++f) norms[f] = betas[f].row(j).norm();
    std::sort(norms.begin(), norms.end());
    mean_norm(j) = std::accumulate(norms.begin(), norms.end(), 0.0) / static_cast<double>(betas.size());
  }
  std::vector<int> support;
  const double peak = m > 0 ? mean_norm.maxCoeff() : 0.0;
  if (peak <= 0.0) return support;
  for (Eigen::Index j = 0; j < m; ++j)
    if (mean_norm(j) > relative_threshold * peak) support.push_back(static_cast<int>(j));
  return support;
}

std::vector<SweepRow> fold_rows(const std::string& name, const RepresentationSpec& spec, const CvResult& cv) {
  int enc_t = 0, enc_r = 0;
  if (spec.method == RepresentationMethod::autoencoder && spec.arch.kind == ArchitectureKind::mdae) {
    const ArchitectureConfig a = spec.arch.validated();
    enc_t = a.enc_t;
    enc_r = a.enc_r;
  }
  std::vector<SweepRow> rows;
  for (const auto& f : cv.folds) rows.push_back({name, cv.latent_dim, enc_t, enc_r, f.fold_id, f.mse, f.r2});
  return rows;
}

SweepSummary summarize(const std::string& name, const RepresentationSpec& spec, const CvResult& cv) {
  const auto rows = fold_rows(name, spec, cv);
  SweepSummary s;
  s.config = name;
  s.enc = cv.latent_dim;
  if (!rows.empty()) {
    s.enc_t = rows.front().enc_t;
    s.enc_r = rows.front().enc_r;
  }
  s.mean_mse = cv.mean_mse;
  s.se_mse = cv.se_mse;
  s.mean_r2 = cv.mean_r2;
  s.se_r2 = cv.se_r2;
  return s;
}

SweepResult sweep(const std::vector<SweepPoint>& grid, const std::vector<SubjectRecord>& subjects,
                  const GraphLaplacian& laplacian, const CvPlan& plan) {
  if (grid.empty()) throw ConfigError("grid", "sweep grid is empty");
  SweepResult out;
  for (const auto& point : grid) {
    spdlog::info("sweep point '{}'", point.name);
    CvResult cv = run_cv(subjects, laplacian, point.config, plan);
    auto rows = fold_rows(point.name, point.config.representation, cv);
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    out.summary.push_back(summarize(point.name, point.config.representation, cv));
    out.runs.push_back(std::move(cv));
  }
  return out;
}

void write_results_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "config,enc,enc_t,enc_r,fold,mse,r2\n" << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.config << ',' << r.enc << ',' << r.enc_t << ',' << r.enc_r << ',' << r.fold << ',' << r.mse << ','
        << r.r2 << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SweepSummary>& rows) {
  out << "config,enc,enc_t,enc_r,mse_mean,mse_se,r2_mean,r2_se\n" << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.config << ',' << r.enc << ',' << r.enc_t << ',' << r.enc_r << ',' << r.mean_mse << ',' << r.se_mse
        << ',' << r.mean_r2 << ',' << r.se_r2 << '\n';
  }
}

void write_significance_csv(std::ostream& out, const SignificanceMap& map) {
  out << "vertex,t,significant\n" << std::setprecision(17);
  for (Eigen::Index j = 0; j < map.t.size(); ++j) {
    out << j << ',' << map.t(j) << ',' << (map.mask[static_cast<std::size_t>(j)] ? 1 : 0) << '\n';
  }
}

}  // namespace mvtrace
