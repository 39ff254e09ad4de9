#include "mvtrace/synth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <cstdio>
#include <set>

#include <Eigen/IterativeLinearSolvers>

#include "mvtrace/error.hpp"

namespace mvtrace {

void GeneratorConfig::validate() const {
  if (n_subjects < 2) throw ConfigError("n_subjects", "must be >= 2");
  if (d_task < 1) throw ConfigError("d_task", "must be >= 1");
  if (d_rest < 1) throw ConfigError("d_rest", "must be >= 1");
  if (k_true < 1 || k_true > std::min(d_task, d_rest)) {
    throw ConfigError("k_true", "must lie in [1, min(d_task, d_rest)]");
  }
  if (n_clusters < 0) throw ConfigError("n_clusters", "must be >= 0");
  if (cluster_size < 1) throw ConfigError("cluster_size", "must be >= 1");
  if (!(noise_sigma >= 0)) throw ConfigError("noise_sigma", "must be >= 0");
  if (!(view_noise >= 0)) throw ConfigError("view_noise", "must be >= 0");
  if (!(smoothing >= 0)) throw ConfigError("smoothing", "must be >= 0");
  if (!(region_smoothing >= 0)) throw ConfigError("region_smoothing", "must be >= 0");
  if (task_private_dim < 0) throw ConfigError("task_private_dim", "must be >= 0");
  if (rest_private_dim < 0) throw ConfigError("rest_private_dim", "must be >= 0");
}

namespace {

Eigen::SparseMatrix<double> shifted_identity(const GraphLaplacian& laplacian, double smoothing) {
  Eigen::SparseMatrix<double> identity(laplacian.dimension(), laplacian.dimension());
  identity.setIdentity();
  return identity + smoothing * laplacian.matrix();
}

}  // namespace

SmoothFieldSampler::SmoothFieldSampler(const GraphLaplacian& laplacian, double smoothing,
                                       std::uint64_t probe_seed)
    : SmoothFieldSampler(shifted_identity(laplacian, smoothing), probe_seed) {}

SmoothFieldSampler::SmoothFieldSampler(Eigen::SparseMatrix<double> system, std::uint64_t probe_seed)
    : system_(std::move(system)) {
  system_.makeCompressed();
  const Eigen::Index m = system_.rows();

  // Average entry variance of S W is tr(S^2) / m; estimate it from seeded probes.
  std::mt19937_64 rng(probe_seed);
  std::normal_distribution<double> normal;
  constexpr int kProbes = 64;
  Eigen::MatrixXd white(m, kProbes);
  for (Eigen::Index c = 0; c < white.cols(); ++c)
    for (Eigen::Index r = 0; r < white.rows(); ++r) white(r, c) = normal(rng);
  scale_ = 1.0;
  const double var = smooth(white).squaredNorm() / static_cast<double>(white.size());
  scale_ = var > 0 ? 1.0 / std::sqrt(var) : 1.0;
}

Eigen::MatrixXd SmoothFieldSampler::smooth(const Eigen::MatrixXd& white) const {
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(1e-8);
  cg.compute(system_);
  Eigen::MatrixXd out(white.rows(), white.cols());
  for (Eigen::Index c = 0; c < white.cols(); ++c) out.col(c) = cg.solve(white.col(c));
  return scale_ * out;
}

Eigen::MatrixXd SmoothFieldSampler::draw(Eigen::Index columns, std::mt19937_64& rng) const {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd white(system_.rows(), columns);
  for (Eigen::Index c = 0; c < columns; ++c)
    for (Eigen::Index r = 0; r < white.rows(); ++r) white(r, c) = normal(rng);
  return smooth(white);
}

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
  return m;
}

// Disjoint BFS-grown clusters; seeds avoid touching earlier clusters.
std::vector<std::vector<int>> plant_clusters(const Mesh& mesh, int count, int size, std::mt19937_64& rng) {
  const auto adj = mesh.adjacency();
  const int m = mesh.vertex_count();
  std::vector<char> blocked(static_cast<std::size_t>(m), 0);
  std::vector<std::vector<int>> clusters;
  std::uniform_int_distribution<int> pick(0, m - 1);
  for (int c = 0; c < count; ++c) {
    std::vector<int> best;
    for (int attempt = 0; attempt < 200 && static_cast<int>(best.size()) < size; ++attempt) {
      const int seed = pick(rng);
      if (blocked[static_cast<std::size_t>(seed)]) continue;
      std::vector<int> cluster;
      std::set<int> seen{seed};
      std::deque<int> queue{seed};
      while (!queue.empty() && static_cast<int>(cluster.size()) < size) {
        const int v = queue.front();
        queue.pop_front();
        cluster.push_back(v);
        for (int w : adj[static_cast<std::size_t>(v)]) {
          if (!blocked[static_cast<std::size_t>(w)] && seen.insert(w).second) queue.push_back(w);
        }
      }
      if (cluster.size() > best.size()) best = std::move(cluster);
    }
    if (static_cast<int>(best.size()) < size) {
      throw ConfigError("n_clusters", "cannot place " + std::to_string(count) + " disjoint clusters of " +
                                          std::to_string(size) + " vertices on this mesh");
    }
    std::sort(best.begin(), best.end());
    for (int v : best) {
      blocked[static_cast<std::size_t>(v)] = 1;
      for (int w : adj[static_cast<std::size_t>(v)]) blocked[static_cast<std::size_t>(w)] = 1;
    }
    clusters.push_back(std::move(best));
  }
  return clusters;
}

}  // namespace

SyntheticDataset generate(const GeneratorConfig& config) {
  config.validate();
  Mesh mesh = make_mesh_from_spec(config.mesh);
  const GraphLaplacian lap = build_laplacian(mesh);
  const int m = mesh.vertex_count();
  const int k = config.k_true;
  if (config.n_clusters * config.cluster_size > m) {
    throw ConfigError("cluster_size", "clusters cover more vertices than the mesh has");
  }

  std::mt19937_64 rng(config.seed);
  GroundTruth truth;
  truth.beta_true = Eigen::MatrixXd::Zero(m, k);
  const auto clusters = plant_clusters(mesh, config.n_clusters, config.cluster_size, rng);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    Eigen::VectorXd direction = gaussian(k, 1, 1.0, rng);
    direction *= config.beta_scale / direction.norm();
    for (int v : clusters[c]) truth.beta_true.row(v) = direction.transpose();
  }
  std::vector<std::pair<int, int>> support;  // (vertex, cluster)
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (int v : clusters[c]) support.emplace_back(v, static_cast<int>(c));
  std::sort(support.begin(), support.end());
  for (auto [v, c] : support) {
    truth.support.push_back(v);
    truth.cluster_of.push_back(c);
  }

  const double load_sd = 1.0 / std::sqrt(static_cast<double>(k));
  truth.loadings_task = gaussian(config.d_task, k, load_sd, rng);
  truth.loadings_rest = config.rest_signal_weight * gaussian(config.d_rest, k, load_sd, rng);
  Eigen::MatrixXd private_task, private_rest;
  if (config.task_private_dim > 0) {
    private_task = gaussian(config.d_task, config.task_private_dim,
                            config.task_private_scale / std::sqrt(config.task_private_dim), rng);
  }
  if (config.rest_private_dim > 0) {
    private_rest = gaussian(config.d_rest, config.rest_private_dim,
                            config.rest_private_scale / std::sqrt(config.rest_private_dim), rng);
  }

  std::vector<int> region(static_cast<std::size_t>(m), -1);
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (int v : clusters[c]) region[static_cast<std::size_t>(v)] = static_cast<int>(c);
  Eigen::SparseMatrix<double> system;
  if (config.region_smoothing > 0) {
    std::vector<std::pair<int, int>> outside, inside;
    for (const auto& [a, b] : mesh.edges()) {
      const int ra = region[static_cast<std::size_t>(a)], rb = region[static_cast<std::size_t>(b)];
      if (ra < 0 && rb < 0) outside.emplace_back(a, b);
      else if (ra == rb) inside.emplace_back(a, b);
    }
    system = shifted_identity(GraphLaplacian(m, outside), config.smoothing) +
             config.region_smoothing * GraphLaplacian(m, inside).matrix();
  } else {
    system = shifted_identity(lap, config.smoothing);
  }
  const SmoothFieldSampler sampler(std::move(system), config.seed ^ 0x5eedf00dULL);
  truth.latent_scale = sampler.scale();

  SyntheticDataset out{std::move(mesh), {}, std::move(truth), {}, Eigen::VectorXd(config.n_subjects)};
  const GroundTruth& gt = out.truth;
  std::normal_distribution<double> normal;
  out.subjects.reserve(static_cast<std::size_t>(config.n_subjects));
  out.latents.reserve(static_cast<std::size_t>(config.n_subjects));
  for (int i = 0; i < config.n_subjects; ++i) {
    Eigen::MatrixXd h = sampler.draw(k, rng);
    SubjectRecord s;
    char id[32];
    std::snprintf(id, sizeof(id), "s%03d", i);
    s.id = id;
    s.task = h * gt.loadings_task.transpose();
    s.rest = h * gt.loadings_rest.transpose();
    if (config.task_private_dim > 0) s.task += sampler.draw(config.task_private_dim, rng) * private_task.transpose();
    if (config.rest_private_dim > 0) s.rest += sampler.draw(config.rest_private_dim, rng) * private_rest.transpose();
    if (config.view_noise > 0) {
      s.task += gaussian(m, config.d_task, config.view_noise, rng);
      s.rest += gaussian(m, config.d_rest, config.view_noise, rng);
    }
    out.raw_scores(i) = gt.beta_true.cwiseProduct(h).sum() + config.noise_sigma * normal(rng);
    out.latents.push_back(std::move(h));
    out.subjects.push_back(std::move(s));
  }

  // Scores are scaled to unit sample sd but not centred: the trace model has
  // no intercept, so a shift would be unexplainable. beta_true is rescaled
  // with them so that score = tr(beta_true^T H) + noise holds exactly.
  Eigen::VectorXd scores = out.raw_scores;
  if (config.standardize_scores) {
    const double mean = scores.mean();
    const double sd = std::sqrt((scores.array() - mean).square().sum() / static_cast<double>(scores.size() - 1));
    if (sd > 0) {
      scores /= sd;
      out.truth.beta_true /= sd;
    }
  }
  for (int i = 0; i < config.n_subjects; ++i) out.subjects[static_cast<std::size_t>(i)].score = scores(i);
  return out;
}

std::vector<SubjectRecord> corrupt_view(const std::vector<SubjectRecord>& subjects, CorruptedView which,
                                        CorruptionMode mode, std::uint64_t seed) {
  validate_subjects(subjects);
  std::vector<SubjectRecord> out = subjects;
  std::mt19937_64 rng(seed);
  auto view = [which](SubjectRecord& s) -> Eigen::MatrixXd& { return which == CorruptedView::task ? s.task : s.rest; };

  if (mode == CorruptionMode::shuffle) {
    std::vector<std::size_t> perm(subjects.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const SubjectRecord& donor = subjects[perm[i]];
      view(out[i]) = which == CorruptedView::task ? donor.task : donor.rest;
    }
    return out;
  }

  // Matched-moment Gaussian noise, moments pooled over subjects and vertices.
  const Eigen::Index cols = view(out.front()).cols();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(cols), sq = Eigen::VectorXd::Zero(cols);
  double count = 0;
  for (auto& s : out) {
    const Eigen::MatrixXd& v = view(s);
    sum += v.colwise().sum().transpose();
    sq += v.cwiseAbs2().colwise().sum().transpose();
    count += static_cast<double>(v.rows());
  }
  const Eigen::VectorXd mean = sum / count;
  const Eigen::VectorXd sd = (sq / count - mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
  std::normal_distribution<double> normal;
  for (auto& s : out) {
    Eigen::MatrixXd& v = view(s);
    for (Eigen::Index c = 0; c < v.cols(); ++c)
      for (Eigen::Index r = 0; r < v.rows(); ++r) v(r, c) = mean(c) + sd(c) * normal(rng);
  }
  return out;
}

}  // namespace mvtrace
