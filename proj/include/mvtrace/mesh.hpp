#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace mvtrace {

using Face = std::array<int, 3>;

// Triangulated surface. Construction validates that every face references
// three distinct in-range vertices; instances are immutable afterwards.
class Mesh {
 public:
  Mesh(Eigen::MatrixX3d positions, std::vector<Face> faces);

  int vertex_count() const { return static_cast<int>(positions_.rows()); }
  const Eigen::MatrixX3d& positions() const { return positions_; }
  const std::vector<Face>& faces() const { return faces_; }

  // Undirected edges (i < j), deduplicated and sorted.
  std::vector<std::pair<int, int>> edges() const;
  // Neighbour lists, each sorted ascending.
  std::vector<std::vector<int>> adjacency() const;

 private:
  Eigen::MatrixX3d positions_;
  std::vector<Face> faces_;
};

Mesh parse_off(std::istream& in);
Mesh load_mesh(const std::filesystem::path& path);
void write_off(std::ostream& out, const Mesh& mesh);
void save_mesh(const std::filesystem::path& path, const Mesh& mesh);

// Unit icosphere: an icosahedron subdivided `subdivisions` times
// (12, 42, 162, 642, ... vertices).
Mesh make_icosphere(int subdivisions);
// Planar rows x cols vertex grid, each cell split into two triangles.
Mesh make_grid(int rows, int cols);
// Parses "icosphere-<k>" or "grid-<r>x<c>". Throws ConfigError on anything else.
Mesh make_mesh_from_spec(const std::string& spec);

int connected_components(int vertex_count, const std::vector<std::pair<int, int>>& edges);

// Combinatorial Laplacian L = D - A of the mesh edge graph.
class GraphLaplacian {
 public:
  GraphLaplacian(int dimension, std::vector<std::pair<int, int>> edges);

  int dimension() const { return dimension_; }
  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const Eigen::VectorXi& degrees() const { return degrees_; }
  int component_count() const { return components_; }

  // L * B for an m x d block.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& block) const;

 private:
  int dimension_;
  std::vector<std::pair<int, int>> edges_;
  Eigen::VectorXi degrees_;
  Eigen::SparseMatrix<double> matrix_;
  int components_;
};

GraphLaplacian build_laplacian(const Mesh& mesh);

// tr(B^T L B) evaluated as the sum over edges of ||B_i - B_j||^2.
double quadratic_form(const GraphLaplacian& laplacian, const Eigen::MatrixXd& block);

// Debug export: one "i j value" line per nonzero, sorted by (i, j).
void write_laplacian_coo(std::ostream& out, const GraphLaplacian& laplacian);

}  // namespace mvtrace
