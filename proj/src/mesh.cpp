#include "mvtrace/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <regex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mvtrace/error.hpp"

namespace mvtrace {

Mesh::Mesh(Eigen::MatrixX3d positions, std::vector<Face> faces)
    : positions_(std::move(positions)), faces_(std::move(faces)) {
  const int m = vertex_count();
  if (m <= 0) throw ValidationError("mesh has no vertices");
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const Face& face = faces_[f];
    for (int idx : face) {
      if (idx < 0 || idx >= m) {
        throw ValidationError("face " + std::to_string(f) + " references vertex " +
                              std::to_string(idx) + " outside [0, " + std::to_string(m) + ")");
      }
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
      throw ValidationError("face " + std::to_string(f) + " is degenerate");
    }
  }
}

std::vector<std::pair<int, int>> Mesh::edges() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(faces_.size() * 3);
  for (const Face& f : faces_) {
    for (int k = 0; k < 3; ++k) {
      int a = f[k], b = f[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      out.emplace_back(a, b);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::vector<int>> Mesh::adjacency() const {
  std::vector<std::vector<int>> adj(vertex_count());
  for (auto [i, j] : edges()) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  for (auto& n : adj) std::sort(n.begin(), n.end());
  return adj;
}

namespace {

// Next non-empty, non-comment line.
bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

}  // namespace

Mesh parse_off(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw ParseError("empty OFF input");
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic != "OFF") throw ParseError("missing OFF header");

  long nv = -1, nf = -1, ne = 0;
  if (!(header >> nv >> nf)) {
    if (!next_line(in, line)) throw ParseError("missing OFF counts line");
    std::istringstream counts(line);
    if (!(counts >> nv >> nf)) throw ParseError("malformed OFF counts line");
    counts >> ne;
  }
  if (nv <= 0 || nf < 0) throw ParseError("invalid OFF vertex/face counts");

  Eigen::MatrixX3d positions(nv, 3);
  for (long v = 0; v < nv; ++v) {
    if (!next_line(in, line)) throw ParseError("truncated OFF vertex list");
    std::istringstream ls(line);
    if (!(ls >> positions(v, 0) >> positions(v, 1) >> positions(v, 2))) {
      throw ParseError("malformed OFF vertex line " + std::to_string(v));
    }
  }
  std::vector<Face> faces;
  faces.reserve(static_cast<std::size_t>(nf));
  for (long f = 0; f < nf; ++f) {
    if (!next_line(in, line)) throw ParseError("truncated OFF face list");
    std::istringstream ls(line);
    int n = 0;
    Face face{};
    if (!(ls >> n)) throw ParseError("malformed OFF face line " + std::to_string(f));
    if (n != 3) throw ParseError("OFF face " + std::to_string(f) + " is not a triangle");
    if (!(ls >> face[0] >> face[1] >> face[2])) {
      throw ParseError("malformed OFF face line " + std::to_string(f));
    }
    faces.push_back(face);
  }
  return Mesh(std::move(positions), std::move(faces));
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh: " + path.string());
  return parse_off(in);
}

void write_off(std::ostream& out, const Mesh& mesh) {
  out << "OFF\n" << mesh.vertex_count() << ' ' << mesh.faces().size() << ' ' << mesh.edges().size()
      << '\n';
  out << std::setprecision(17);
  const auto& p = mesh.positions();
  for (Eigen::Index v = 0; v < p.rows(); ++v) out << p(v, 0) << ' ' << p(v, 1) << ' ' << p(v, 2) << '\n';
  for (const Face& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

void save_mesh(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_off(out, mesh);
}

Mesh make_icosphere(int subdivisions) {
  if (subdivisions < 0) throw ConfigError("mesh", "icosphere subdivision level must be >= 0");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<Face> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      verts.push_back((verts[a] + verts[b]).normalized());
      const int idx = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const Face& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  Eigen::MatrixX3d positions(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) positions.row(static_cast<Eigen::Index>(i)) = verts[i];
  return Mesh(std::move(positions), std::move(faces));
}

Mesh make_grid(int rows, int cols) {
  if (rows < 2 || cols < 2) throw ConfigError("mesh", "grid needs at least 2 rows and 2 columns");
  Eigen::MatrixX3d positions(rows * cols, 3);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) positions.row(r * cols + c) << c, r, 0.0;
  std::vector<Face> faces;
  faces.reserve(static_cast<std::size_t>(2 * (rows - 1) * (cols - 1)));
  for (int r = 0; r + 1 < rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c) {
      const int v00 = r * cols + c, v01 = v00 + 1, v10 = v00 + cols, v11 = v10 + 1;
      faces.push_back({v00, v01, v11});
      faces.push_back({v00, v11, v10});
    }
  }
  return Mesh(std::move(positions), std::move(faces));
}

Mesh make_mesh_from_spec(const std::string& spec) {
  static const std::regex ico(R"(icosphere-(\d+))");
  static const std::regex grid(R"(grid-(\d+)x(\d+))");
  std::smatch m;
  if (std::regex_match(spec, m, ico)) {
    const int k = std::stoi(m[1]);
    if (k > 7) throw ConfigError("mesh", "icosphere level " + m[1].str() + " is too large");
    return make_icosphere(k);
  }
  if (std::regex_match(spec, m, grid)) return make_grid(std::stoi(m[1]), std::stoi(m[2]));
  throw ConfigError("mesh", "unrecognised mesh spec '" + spec + "' (expected icosphere-K or grid-RxC)");
}

int connected_components(int vertex_count, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> parent(vertex_count);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int components = vertex_count;
  for (auto [a, b] : edges) {
    const int ra = find(a), rb = find(b);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  return components;
}

GraphLaplacian::GraphLaplacian(int dimension, std::vector<std::pair<int, int>> edges)
    : dimension_(dimension), edges_(std::move(edges)), degrees_(Eigen::VectorXi::Zero(dimension)) {
  for (auto& e : edges_) {
    if (e.first > e.second) std::swap(e.first, e.second);
    if (e.first < 0 || e.second >= dimension_ || e.first == e.second) {
      throw ValidationError("invalid Laplacian edge");
    }
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges_.size() * 2 + static_cast<std::size_t>(dimension_));
  for (auto [i, j] : edges_) {
    ++degrees_[i];
    ++degrees_[j];
    triplets.emplace_back(i, j, -1.0);
    triplets.emplace_back(j, i, -1.0);
  }
  for (int i = 0; i < dimension_; ++i) triplets.emplace_back(i, i, degrees_[i]);
  matrix_.resize(dimension_, dimension_);
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();

  components_ = connected_components(dimension_, edges_);
}

Eigen::MatrixXd GraphLaplacian::apply(const Eigen::MatrixXd& block) const {
  if (block.rows() != dimension_) {
    throw ShapeError("Laplacian apply: block has " + std::to_string(block.rows()) +
                     " rows, expected " + std::to_string(dimension_));
  }
  return matrix_ * block;
}

GraphLaplacian build_laplacian(const Mesh& mesh) {
  GraphLaplacian lap(mesh.vertex_count(), mesh.edges());
  if (lap.component_count() > 1) {
    spdlog::warn("mesh graph has {} connected components; Laplacian is block-diagonal", lap.component_count());
  }
  return lap;
}

double quadratic_form(const GraphLaplacian& laplacian, const Eigen::MatrixXd& block) {
  if (block.rows() != laplacian.dimension()) {
    throw ShapeError("quadratic_form: block has " + std::to_string(block.rows()) +
                     " rows, Laplacian dimension is " + std::to_string(laplacian.dimension()));
  }
  double total = 0.0;
  for (auto [i, j] : laplacian.edges()) total += (block.row(i) - block.row(j)).squaredNorm();
  return total;
}

void write_laplacian_coo(std::ostream& out, const GraphLaplacian& laplacian) {
  // Row-major copy so iteration order is (i, j).
  const Eigen::SparseMatrix<double, Eigen::RowMajor> rows = laplacian.matrix();
  for (int i = 0; i < rows.outerSize(); ++i) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, i); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
}

}  // namespace mvtrace
