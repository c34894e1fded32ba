#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "biotrom/mesh.hpp"

namespace biotrom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

using Barycentric = std::array<double, 3>;

/// Symmetric rule on the reference triangle, exact for polynomials of degree 4.
/// Weights sum to one (multiply by the cell area).
struct TriangleQuadrature {
  std::vector<Barycentric> points;
  std::vector<double> weights;
};
const TriangleQuadrature& triangle_quadrature_degree4();

/// Gauss-Legendre on [0,1], 3 points (exact to degree 5). Weights sum to one.
struct LineQuadrature {
  std::vector<double> points;
  std::vector<double> weights;
};
const LineQuadrature& line_quadrature_gauss3();

/// Per-cell affine geometry: gradients of the barycentric coordinates are constant.
struct CellGeometry {
  std::array<Point, 3> vertices;
  double area = 0.0;
  std::array<std::array<double, 2>, 3> grad_bary{};

  Point map(const Barycentric& b) const;
  Barycentric barycentric(const Point& p) const;
};
CellGeometry cell_geometry(const Mesh& mesh, int c);

/// Quadratic Lagrange basis: vertices 0..2, then midpoints of the edges opposite
/// vertex 0, 1, 2.
std::array<double, 6> p2_values(const Barycentric& b);
std::array<std::array<double, 2>, 6> p2_gradients(const Barycentric& b, const CellGeometry& g);

enum class SpaceKind { VectorCG2, ScalarDG1 };

/// Local-to-global dof table. Vector CG2 dofs are interleaved (2 * node + component),
/// nodes being vertices followed by edges. DG1 dofs are 3 * cell + local vertex.
class DofMap {
 public:
  static DofMap vector_cg2(const Mesh& mesh);
  static DofMap scalar_dg1(const Mesh& mesh);

  SpaceKind kind() const { return kind_; }
  int num_dofs() const { return num_dofs_; }
  int dofs_per_cell() const { return stride_; }
  std::span<const int> cell_dofs(int c) const {
    return {table_.data() + static_cast<std::size_t>(c) * stride_, static_cast<std::size_t>(stride_)};
  }

 private:
  SpaceKind kind_ = SpaceKind::ScalarDG1;
  int num_dofs_ = 0;
  int stride_ = 0;
  std::vector<int> table_;
};

/// Coordinates of each scalar CG2 node (vertices, then edge midpoints).
std::vector<Point> cg2_node_points(const Mesh& mesh);

SparseMatrix assemble_cg2_vector_mass(const Mesh& mesh, const DofMap& dofs);
SparseMatrix assemble_dg1_mass(const Mesh& mesh);

/// Nodal interpolation of analytic fields.
Vector interpolate_cg2(const Mesh& mesh, const std::function<std::array<double, 2>(Point)>& f);
Vector interpolate_dg1(const Mesh& mesh, const std::function<double(Point)>& f);

/// Cell containing `p` (lowest index on ties); throws if `p` is outside the mesh.
int locate_cell(const Mesh& mesh, const Point& p);

std::vector<std::array<double, 2>> evaluate_cg2(const Mesh& mesh, const Vector& u,
                                                std::span<const Point> points);
std::vector<double> evaluate_dg1(const Mesh& mesh, const Vector& p, std::span<const Point> points);

}  // namespace biotrom
