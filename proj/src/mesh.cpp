#include "biotrom/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

namespace biotrom {

namespace {

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

constexpr double kGeomTol = 1e-12;

}  // namespace

const char* to_string(BoundaryLabel label) {
  switch (label) {
    case BoundaryLabel::Left: return "Left";
    case BoundaryLabel::Top: return "Top";
    case BoundaryLabel::Right: return "Right";
    case BoundaryLabel::Bottom: return "Bottom";
  }
  return "?";
}

Mesh::Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> cells)
    : vertices_(std::move(vertices)), cells_(std::move(cells)) {
  areas_.resize(cells_.size());
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    auto& tri = cells_[c];
    double a = signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
    if (a < 0.0) {
      std::swap(tri[1], tri[2]);
      a = -a;
    }
    if (!(a > 0.0)) throw std::invalid_argument("Mesh: degenerate cell " + std::to_string(c));
    areas_[c] = a;
  }
  build_topology();
}

void Mesh::build_topology() {
  std::map<std::pair<int, int>, int> edge_index;
  std::vector<std::vector<int>> edge_cells;
  cell_edges_.resize(cells_.size());
  for (int c = 0; c < num_cells(); ++c) {
    const auto& tri = cells_[c];
    for (int i = 0; i < 3; ++i) {
      const int a = tri[(i + 1) % 3];
      const int b = tri[(i + 2) % 3];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = edge_index.try_emplace({key.first, key.second}, num_edges());
      if (inserted) {
        edges_.push_back({key.first, key.second});
        edge_cells.emplace_back();
      }
      cell_edges_[c][i] = it->second;
      edge_cells[it->second].push_back(c);
    }
  }

  auto outward_normal = [&](int c, int e) {
    const Point& a = vertices_[edges_[e][0]];
    const Point& b = vertices_[edges_[e][1]];
    const double len = distance(a, b);
    Point n{(b.y - a.y) / len, -(b.x - a.x) / len};
    const Point g = centroid(c);
    if ((g.x - a.x) * n.x + (g.y - a.y) * n.y > 0.0) {
      n.x = -n.x;
      n.y = -n.y;
    }
    return n;
  };

  for (int e = 0; e < num_edges(); ++e) {
    const auto& owners = edge_cells[e];
    if (owners.size() == 2) {
      InteriorFacet f;
      f.edge = e;
      f.plus_cell = std::min(owners[0], owners[1]);
      f.minus_cell = std::max(owners[0], owners[1]);
      f.normal = outward_normal(f.plus_cell, e);
      interior_.push_back(f);
    } else if (owners.size() == 1) {
      const Point& a = vertices_[edges_[e][0]];
      const Point& b = vertices_[edges_[e][1]];
      BoundaryFacet f;
      f.edge = e;
      f.cell = owners[0];
      f.normal = outward_normal(f.cell, e);
      if (std::abs(a.x) < kGeomTol && std::abs(b.x) < kGeomTol) {
        f.label = BoundaryLabel::Left;
      } else if (std::abs(a.x - 1.0) < kGeomTol && std::abs(b.x - 1.0) < kGeomTol) {
        f.label = BoundaryLabel::Right;
      } else if (std::abs(a.y - 1.0) < kGeomTol && std::abs(b.y - 1.0) < kGeomTol) {
        f.label = BoundaryLabel::Top;
      } else if (std::abs(a.y) < kGeomTol && std::abs(b.y) < kGeomTol) {
        f.label = BoundaryLabel::Bottom;
      } else {
        // Non-unit-square geometry (e.g. scaled meshes): label by normal.
        if (f.normal.x < -0.5) f.label = BoundaryLabel::Left;
        else if (f.normal.x > 0.5) f.label = BoundaryLabel::Right;
        else if (f.normal.y > 0.5) f.label = BoundaryLabel::Top;
        else f.label = BoundaryLabel::Bottom;
      }
      boundary_.push_back(f);
    } else {
      throw std::invalid_argument("Mesh: non-manifold edge " + std::to_string(e));
    }
  }

  subdomain_.resize(cells_.size());
  for (int c = 0; c < num_cells(); ++c) {
    subdomain_[c] = centroid(c).y < 0.5 ? Subdomain::Lower : Subdomain::Upper;
  }
}

std::array<Point, 3> Mesh::cell_points(int c) const {
  const auto& tri = cells_[c];
  return {vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]};
}

double Mesh::cell_diameter(int c) const {
  const auto p = cell_points(c);
  return std::max({distance(p[0], p[1]), distance(p[1], p[2]), distance(p[2], p[0])});
}

Point Mesh::centroid(int c) const {
  const auto p = cell_points(c);
  return {(p[0].x + p[1].x + p[2].x) / 3.0, (p[0].y + p[1].y + p[2].y) / 3.0};
}

double Mesh::edge_length(int e) const {
  return distance(vertices_[edges_[e][0]], vertices_[edges_[e][1]]);
}

Point Mesh::edge_midpoint(int e) const {
  const Point& a = vertices_[edges_[e][0]];
  const Point& b = vertices_[edges_[e][1]];
  return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
}

double Mesh::max_diameter() const {
  double h = 0.0;
  for (int c = 0; c < num_cells(); ++c) h = std::max(h, cell_diameter(c));
  return h;
}

Mesh Mesh::scaled(double factor) const {
  std::vector<Point> v = vertices_;
  for (auto& p : v) {
    p.x *= factor;
    p.y *= factor;
  }
  return Mesh(std::move(v), cells_);
}

Mesh build_unit_square_mesh(int n_x, bool split_at_half, int crossed_squares) {
  if (n_x < 2) throw std::invalid_argument("build_unit_square_mesh: n_x must be >= 2");
  if (split_at_half && n_x % 2 != 0) {
    throw std::invalid_argument("build_unit_square_mesh: n_x = " + std::to_string(n_x) +
                                " is odd, so y = 0.5 would cut through cells; use an even n_x");
  }
  const long n_squares = static_cast<long>(n_x) * n_x;
  if (crossed_squares < 0 || crossed_squares > n_squares) {
    throw std::invalid_argument("build_unit_square_mesh: crossed_squares out of range");
  }

  std::vector<Point> vertices;
  vertices.reserve((n_x + 1) * (n_x + 1) + crossed_squares);
  const double h = 1.0 / n_x;
  for (int j = 0; j <= n_x; ++j) {
    for (int i = 0; i <= n_x; ++i) vertices.push_back({i * h, j * h});
  }
  auto node = [n_x](int i, int j) { return j * (n_x + 1) + i; };

  std::vector<std::array<int, 3>> cells;
  cells.reserve(2 * n_squares + 2 * crossed_squares);
  for (int j = 0; j < n_x; ++j) {
    for (int i = 0; i < n_x; ++i) {
      const long s = static_cast<long>(j) * n_x + i;
      const bool crossed = (s + 1) * crossed_squares / n_squares > s * crossed_squares / n_squares;
      const int a = node(i, j), b = node(i + 1, j), c = node(i + 1, j + 1), d = node(i, j + 1);
      if (crossed) {
        const int m = static_cast<int>(vertices.size());
        vertices.push_back({(i + 0.5) * h, (j + 0.5) * h});
        cells.push_back({a, b, m});
        cells.push_back({b, c, m});
        cells.push_back({c, d, m});
        cells.push_back({d, a, m});
      } else {
        cells.push_back({a, b, c});
        cells.push_back({a, c, d});
      }
    }
  }
  return Mesh(std::move(vertices), std::move(cells));
}

Mesh reference_mesh() { return build_unit_square_mesh(30, true, 285); }

double facet_length_scale(double area_plus, double area_minus, double facet_length) {
  if (!(facet_length > 0.0)) throw std::invalid_argument("facet_length_scale: degenerate facet");
  return (area_plus + area_minus) / (2.0 * facet_length);
}

double facet_length_scale(const Mesh& mesh, const InteriorFacet& facet) {
  return facet_length_scale(mesh.cell_area(facet.plus_cell), mesh.cell_area(facet.minus_cell),
                            mesh.edge_length(facet.edge));
}

double facet_length_scale(const Mesh& mesh, const BoundaryFacet& facet) {
  const double a = mesh.cell_area(facet.cell);
  return facet_length_scale(a, a, mesh.edge_length(facet.edge));
}

void write_mesh_text(const Mesh& mesh, std::ostream& out) {
  out.precision(17);
  out << "vertices " << mesh.num_vertices() << "\n";
  for (const auto& p : mesh.vertices()) out << p.x << " " << p.y << "\n";
  out << "cells " << mesh.num_cells() << "\n";
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cell(c);
    out << t[0] << " " << t[1] << " " << t[2] << " "
        << (mesh.subdomain(c) == Subdomain::Lower ? "lower" : "upper") << "\n";
  }
  out << "boundary " << mesh.boundary_facets().size() << "\n";
  for (const auto& f : mesh.boundary_facets()) {
    const auto& e = mesh.edge(f.edge);
    out << e[0] << " " << e[1] << " " << f.cell << " " << to_string(f.label) << "\n";
  }
}

}  // namespace biotrom
