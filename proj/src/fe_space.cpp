#include "biotrom/fe_space.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace biotrom {

const TriangleQuadrature& triangle_quadrature_degree4() {
  static const TriangleQuadrature rule = [] {
    constexpr double a1 = 0.445948490915965, w1 = 0.223381589678011;
    constexpr double a2 = 0.091576213509771, w2 = 0.109951743655322;
    constexpr double b1 = 1.0 - 2.0 * a1, b2 = 1.0 - 2.0 * a2;
    TriangleQuadrature q;
    q.points = {{b1, a1, a1}, {a1, b1, a1}, {a1, a1, b1}, {b2, a2, a2}, {a2, b2, a2}, {a2, a2, b2}};
    q.weights = {w1, w1, w1, w2, w2, w2};
    return q;
  }();
  return rule;
}

const LineQuadrature& line_quadrature_gauss3() {
  static const LineQuadrature rule = [] {
    const double d = 0.5 * std::sqrt(3.0 / 5.0);
    return LineQuadrature{{0.5 - d, 0.5, 0.5 + d}, {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0}};
  }();
  return rule;
}

Point CellGeometry::map(const Barycentric& b) const {
  return {b[0] * vertices[0].x + b[1] * vertices[1].x + b[2] * vertices[2].x,
          b[0] * vertices[0].y + b[1] * vertices[1].y + b[2] * vertices[2].y};
}

Barycentric CellGeometry::barycentric(const Point& p) const {
  Barycentric b{};
  for (int i = 0; i < 3; ++i) {
    const Point& pj = vertices[(i + 1) % 3];
    b[i] = grad_bary[i][0] * (p.x - pj.x) + grad_bary[i][1] * (p.y - pj.y);
  }
  return b;
}

CellGeometry cell_geometry(const Mesh& mesh, int c) {
  CellGeometry g;
  g.vertices = mesh.cell_points(c);
  g.area = mesh.cell_area(c);
  for (int i = 0; i < 3; ++i) {
    const Point& pj = g.vertices[(i + 1) % 3];
    const Point& pk = g.vertices[(i + 2) % 3];
    g.grad_bary[i] = {(pj.y - pk.y) / (2.0 * g.area), (pk.x - pj.x) / (2.0 * g.area)};
  }
  return g;
}

std::array<double, 6> p2_values(const Barycentric& b) {
  return {b[0] * (2.0 * b[0] - 1.0), b[1] * (2.0 * b[1] - 1.0), b[2] * (2.0 * b[2] - 1.0),
          4.0 * b[1] * b[2], 4.0 * b[2] * b[0], 4.0 * b[0] * b[1]};
}

std::array<std::array<double, 2>, 6> p2_gradients(const Barycentric& b, const CellGeometry& g) {
  std::array<std::array<double, 2>, 6> out{};
  for (int i = 0; i < 3; ++i) {
    const double s = 4.0 * b[i] - 1.0;
    out[i] = {s * g.grad_bary[i][0], s * g.grad_bary[i][1]};
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    for (int d = 0; d < 2; ++d) {
      out[3 + i][d] = 4.0 * (b[j] * g.grad_bary[k][d] + b[k] * g.grad_bary[j][d]);
    }
  }
  return out;
}

DofMap DofMap::vector_cg2(const Mesh& mesh) {
  DofMap m;
  m.kind_ = SpaceKind::VectorCG2;
  m.stride_ = 12;
  m.num_dofs_ = 2 * (mesh.num_vertices() + mesh.num_edges());
  m.table_.resize(static_cast<std::size_t>(mesh.num_cells()) * 12);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& tri = mesh.cell(c);
    const auto& edges = mesh.cell_edges(c);
    for (int n = 0; n < 6; ++n) {
      const int node = n < 3 ? tri[n] : mesh.num_vertices() + edges[n - 3];
      for (int comp = 0; comp < 2; ++comp) m.table_[c * 12 + 2 * n + comp] = 2 * node + comp;
    }
  }
  return m;
}

DofMap DofMap::scalar_dg1(const Mesh& mesh) {
  DofMap m;
  m.kind_ = SpaceKind::ScalarDG1;
  m.stride_ = 3;
  m.num_dofs_ = 3 * mesh.num_cells();
  m.table_.resize(m.num_dofs_);
  for (int i = 0; i < m.num_dofs_; ++i) m.table_[i] = i;
  return m;
}

std::vector<Point> cg2_node_points(const Mesh& mesh) {
  std::vector<Point> pts = mesh.vertices();
  pts.reserve(mesh.num_vertices() + mesh.num_edges());
  for (int e = 0; e < mesh.num_edges(); ++e) pts.push_back(mesh.edge_midpoint(e));
  return pts;
}

SparseMatrix assemble_cg2_vector_mass(const Mesh& mesh, const DofMap& dofs) {
  const auto& q = triangle_quadrature_degree4();
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_cells()) * 72);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double area = mesh.cell_area(c);
    Eigen::Matrix<double, 6, 6> local = Eigen::Matrix<double, 6, 6>::Zero();
    for (std::size_t k = 0; k < q.points.size(); ++k) {
      const auto phi = p2_values(q.points[k]);
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) local(a, b) += q.weights[k] * area * phi[a] * phi[b];
    }
    const auto cd = dofs.cell_dofs(c);
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b)
        for (int comp = 0; comp < 2; ++comp)
          trip.emplace_back(cd[2 * a + comp], cd[2 * b + comp], local(a, b));
  }
  SparseMatrix m(dofs.num_dofs(), dofs.num_dofs());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SparseMatrix assemble_dg1_mass(const Mesh& mesh) {
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_cells()) * 9);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double area = mesh.cell_area(c);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        trip.emplace_back(3 * c + a, 3 * c + b, area * (a == b ? 2.0 : 1.0) / 12.0);
  }
  SparseMatrix m(3 * mesh.num_cells(), 3 * mesh.num_cells());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

Vector interpolate_cg2(const Mesh& mesh, const std::function<std::array<double, 2>(Point)>& f) {
  const auto nodes = cg2_node_points(mesh);
  Vector u(2 * static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const auto v = f(nodes[n]);
    u[2 * n] = v[0];
    u[2 * n + 1] = v[1];
  }
  return u;
}

Vector interpolate_dg1(const Mesh& mesh, const std::function<double(Point)>& f) {
  Vector p(3 * mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto pts = mesh.cell_points(c);
    for (int i = 0; i < 3; ++i) p[3 * c + i] = f(pts[i]);
  }
  return p;
}

int locate_cell(const Mesh& mesh, const Point& p) {
  constexpr double tol = 1e-12;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto b = cell_geometry(mesh, c).barycentric(p);
    if (b[0] >= -tol && b[1] >= -tol && b[2] >= -tol) return c;
  }
  throw std::out_of_range("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                          ") lies outside the mesh");
}

std::vector<std::array<double, 2>> evaluate_cg2(const Mesh& mesh, const Vector& u,
                                                std::span<const Point> points) {
  const DofMap dofs = DofMap::vector_cg2(mesh);
  if (u.size() != dofs.num_dofs()) throw std::invalid_argument("evaluate_cg2: size mismatch");
  std::vector<std::array<double, 2>> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    const int c = locate_cell(mesh, p);
    const auto phi = p2_values(cell_geometry(mesh, c).barycentric(p));
    const auto cd = dofs.cell_dofs(c);
    std::array<double, 2> v{0.0, 0.0};
    for (int a = 0; a < 6; ++a)
      for (int comp = 0; comp < 2; ++comp) v[comp] += phi[a] * u[cd[2 * a + comp]];
    out.push_back(v);
  }
  return out;
}

std::vector<double> evaluate_dg1(const Mesh& mesh, const Vector& p, std::span<const Point> points) {
  if (p.size() != 3 * mesh.num_cells()) throw std::invalid_argument("evaluate_dg1: size mismatch");
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& x : points) {
    const int c = locate_cell(mesh, x);
    const auto b = cell_geometry(mesh, c).barycentric(x);
    out.push_back(b[0] * p[3 * c] + b[1] * p[3 * c + 1] + b[2] * p[3 * c + 2]);
  }
  return out;
}

}  // namespace biotrom
