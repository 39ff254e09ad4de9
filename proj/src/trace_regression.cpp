#include "mvtrace/trace_regression.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>

#include <spdlog/spdlog.h>

#include "mvtrace/error.hpp"

namespace mvtrace {

void RegularizationConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha", "must be finite and >= 0");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("eta", "must be finite and >= 0");
}

void FistaConfig::validate() const {
  if (max_iters < 1) throw ConfigError("max_iters", "must be >= 1");
  if (!(rel_tolerance > 0.0)) throw ConfigError("rel_tolerance", "must be > 0");
  if (window < 1) throw ConfigError("window", "must be >= 1");
  if (!(backtracking_growth > 1.0)) throw ConfigError("backtracking_growth", "must be > 1");
  if (power_iterations < 1) throw ConfigError("power_iterations", "must be >= 1");
}

RegressionDataset::RegressionDataset(const std::vector<Eigen::MatrixXd>& latents, Eigen::VectorXd targets,
                                     GraphLaplacian laplacian)
    : m_(0), d_(0), targets_(std::move(targets)), laplacian_(std::move(laplacian)) {
  if (latents.empty()) throw ValidationError("regression dataset has no subjects");
  if (static_cast<Eigen::Index>(latents.size()) != targets_.size()) {
    throw ShapeError("latent count and target count differ");
  }
  m_ = latents.front().rows();
  d_ = latents.front().cols();
  if (m_ != laplacian_.dimension()) {
    throw ShapeError("latent rows (" + std::to_string(m_) + ") differ from Laplacian dimension (" +
                     std::to_string(laplacian_.dimension()) + ")");
  }
  design_.resize(static_cast<Eigen::Index>(latents.size()), m_ * d_);
  for (std::size_t i = 0; i < latents.size(); ++i) {
    const Eigen::MatrixXd& z = latents[i];
    if (z.rows() != m_ || z.cols() != d_) throw ShapeError("all latent matrices must share (m, d)");
    design_.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(z.data(), z.size());
  }
  if (!design_.allFinite() || !targets_.allFinite()) throw ValidationError("regression inputs must be finite");
}

namespace {

void check_beta(const Eigen::MatrixXd& beta, const RegressionDataset& data) {
  if (beta.rows() != data.vertices() || beta.cols() != data.latent_dim()) {
    throw ShapeError("beta is " + std::to_string(beta.rows()) + "x" + std::to_string(beta.cols()) +
                     ", dataset expects " + std::to_string(data.vertices()) + "x" +
                     std::to_string(data.latent_dim()));
  }
}

Eigen::Map<const Eigen::VectorXd> flat(const Eigen::MatrixXd& beta) {
  return Eigen::Map<const Eigen::VectorXd>(beta.data(), beta.size());
}

}  // namespace

Eigen::VectorXd RegressionDataset::predictions(const Eigen::MatrixXd& beta) const {
  check_beta(beta, *this);
  return design_ * flat(beta);
}

double predict(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& latent) {
  if (beta.rows() != latent.rows() || beta.cols() != latent.cols()) {
    throw ShapeError("predict: beta and latent shapes differ");
  }
  return beta.cwiseProduct(latent).sum();
}

double smooth_objective(const Eigen::MatrixXd& beta, const RegressionDataset& data, double eta) {
  const double fit = (data.targets() - data.predictions(beta)).squaredNorm();
  if (eta == 0.0) return fit;
  return fit + 0.5 * eta * quadratic_form(data.laplacian(), beta);
}

double group_penalty(const Eigen::MatrixXd& beta, GroupPenalty penalty) {
  if (penalty == GroupPenalty::squared_norm) return beta.squaredNorm();
  return beta.rowwise().norm().sum();
}

double objective(const Eigen::MatrixXd& beta, const RegressionDataset& data, const RegularizationConfig& reg) {
  return smooth_objective(beta, data, reg.eta) + reg.alpha * group_penalty(beta, reg.penalty);
}

Eigen::MatrixXd smooth_gradient(const Eigen::MatrixXd& beta, const RegressionDataset& data, double eta) {
  const Eigen::VectorXd residual = data.targets() - data.predictions(beta);
  Eigen::VectorXd g = -2.0 * (data.design().transpose() * residual);
  Eigen::MatrixXd grad = Eigen::Map<Eigen::MatrixXd>(g.data(), data.vertices(), data.latent_dim());
  if (eta != 0.0) grad += eta * (data.laplacian().matrix() * beta);
  return grad;
}

Eigen::MatrixXd prox_group(const Eigen::MatrixXd& beta, double threshold) {
  if (threshold < 0.0) throw ValidationError("prox threshold must be >= 0");
  Eigen::MatrixXd out = beta;
  if (threshold == 0.0) return out;
  for (Eigen::Index j = 0; j < out.rows(); ++j) {
    const double norm = out.row(j).norm();
    if (norm <= threshold) out.row(j).setZero();
    else out.row(j) *= 1.0 - threshold / norm;
  }
  return out;
}

Eigen::MatrixXd prox_group_squared(const Eigen::MatrixXd& beta, double threshold) {
  if (threshold < 0.0) throw ValidationError("prox threshold must be >= 0");
  return beta / (1.0 + 2.0 * threshold);
}

Eigen::MatrixXd prox_penalty(const Eigen::MatrixXd& beta, double threshold, GroupPenalty penalty) {
  return penalty == GroupPenalty::norm ? prox_group(beta, threshold) : prox_group_squared(beta, threshold);
}

double lipschitz_estimate(const RegressionDataset& data, double eta, int iterations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto power = [&](Eigen::Index n, const auto& apply) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
      Eigen::VectorXd w = apply(v);
      lambda = w.norm();
      if (lambda == 0.0) return 0.0;
      v = w / lambda;
    }
    return lambda;
  };
  // lambda_max(X^T X) = lambda_max(X X^T); iterate on the smaller side.
  const Eigen::MatrixXd& x = data.design();
  double design_lambda = 0.0;
  if (x.rows() <= x.cols()) {
    const Eigen::MatrixXd gram = x * x.transpose();
    design_lambda = power(gram.rows(), [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(gram * v); });
  } else {
    design_lambda = power(x.cols(), [&](const Eigen::VectorXd& v) {
      return Eigen::VectorXd(x.transpose() * (x * v));
    });
  }
  double lap_lambda = 0.0;
  if (eta != 0.0) {
    const auto& lap = data.laplacian().matrix();
    lap_lambda = power(lap.rows(), [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(lap * v); });
  }
  // Power iteration approaches lambda_max from below; pad the estimate.
  return 1.05 * (2.0 * design_lambda + eta * lap_lambda);
}

FitResult fit_mfista(const RegressionDataset& data, const RegularizationConfig& reg, const FistaConfig& fista,
                     const Eigen::MatrixXd& init) {
  reg.validate();
  fista.validate();
  const Eigen::Index m = data.vertices(), d = data.latent_dim();

  Eigen::MatrixXd x = init.size() == 0 ? Eigen::MatrixXd::Zero(m, d) : init;
  check_beta(x, data);

  double lipschitz = lipschitz_estimate(data, reg.eta, fista.power_iterations, fista.seed);
  if (!(lipschitz > 0.0)) lipschitz = 1.0;  // zero design and eta: any step is exact

  auto full = [&](const Eigen::MatrixXd& b) { return objective(b, data, reg); };

  FitResult res;
  double fx = full(x);
  if (!std::isfinite(fx)) throw NumericalError("objective is not finite at the initial point");
  res.objective_trace.push_back(fx);

  Eigen::MatrixXd y = x;
  double t = 1.0;
  for (int k = 1; k <= fista.max_iters; ++k) {
    const Eigen::MatrixXd grad = smooth_gradient(y, data, reg.eta);
    Eigen::MatrixXd z;
    double fz = 0.0;
    if (fista.step_policy == StepPolicy::fixed_from_lipschitz) {
      z = prox_penalty(y - grad / lipschitz, reg.alpha / lipschitz, reg.penalty);
      fz = full(z);
    } else {
      const double fy = smooth_objective(y, data, reg.eta);
      for (;;) {
        z = prox_penalty(y - grad / lipschitz, reg.alpha / lipschitz, reg.penalty);
        const Eigen::MatrixXd diff = z - y;
        const double model = fy + grad.cwiseProduct(diff).sum() + 0.5 * lipschitz * diff.squaredNorm();
        const double fsz = smooth_objective(z, data, reg.eta);
        if (fsz <= model * (1.0 + 1e-12) + 1e-300) {
          fz = fsz + reg.alpha * group_penalty(z, reg.penalty);
          break;
        }
        lipschitz *= fista.backtracking_growth;
        if (!std::isfinite(lipschitz)) throw NumericalError("backtracking diverged");
      }
    }
    if (!std::isfinite(fz)) {
      throw NumericalError("objective became non-finite at iteration " + std::to_string(k) +
                           "; check the step policy");
    }

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    Eigen::MatrixXd x_next;
    double f_next;
    if (fz <= fx) {
      x_next = z;
      f_next = fz;
    } else {
      x_next = x;
      f_next = fx;
    }
    y = x_next + (t / t_next) * (z - x_next) + ((t - 1.0) / t_next) * (x_next - x);
    x = std::move(x_next);
    fx = f_next;
    t = t_next;
    res.objective_trace.push_back(fx);
    res.iterations = k;

    if (k >= fista.window) {
      const double before = res.objective_trace[static_cast<std::size_t>(k - fista.window)];
      const double scale = std::max(std::abs(fx), std::numeric_limits<double>::min());
      if (before - fx <= fista.rel_tolerance * scale) {
        res.converged = true;
        break;
      }
    }
  }
  if (!res.converged) {
    spdlog::warn("MFISTA stopped at max_iters={} before reaching tolerance {}", fista.max_iters,
                 fista.rel_tolerance);
  }
  res.beta = std::move(x);
  res.step = 1.0 / lipschitz;
  return res;
}

std::vector<int> nonzero_rows(const Eigen::MatrixXd& beta, double tolerance) {
  std::vector<int> rows;
  for (Eigen::Index j = 0; j < beta.rows(); ++j) {
    if (beta.row(j).norm() > tolerance) rows.push_back(static_cast<int>(j));
  }
  return rows;
}

void write_beta_sidecar(std::ostream& out, const Eigen::MatrixXd& beta) {
  out << "# vertex row_norm\n" << std::setprecision(17);
  for (int j : nonzero_rows(beta)) out << j << ' ' << beta.row(j).norm() << '\n';
}

}  // namespace mvtrace
