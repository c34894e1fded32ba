#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace biotrom {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class BoundaryLabel : std::uint8_t { Left = 0, Top = 1, Right = 2, Bottom = 3 };

enum class Subdomain : std::uint8_t { Lower = 0, Upper = 1 };

const char* to_string(BoundaryLabel label);

/// Facet shared by two cells. `plus_cell` is always the lower cell index and
/// `normal` points from the plus cell into the minus cell.
struct InteriorFacet {
  int edge = -1;
  int plus_cell = -1;
  int minus_cell = -1;
  Point normal;
};

struct BoundaryFacet {
  int edge = -1;
  int cell = -1;
  BoundaryLabel label = BoundaryLabel::Bottom;
  Point normal;  // outward
};

/// Conforming 2D triangulation with facet topology.
///
/// Cells are stored counter-clockwise. Local edge i of a cell is the edge
/// opposite local vertex i.
class Mesh {
 public:
  Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> cells);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::array<int, 3>& cell(int c) const { return cells_[c]; }
  const std::array<int, 2>& edge(int e) const { return edges_[e]; }
  const std::array<int, 3>& cell_edges(int c) const { return cell_edges_[c]; }
  const std::vector<InteriorFacet>& interior_facets() const { return interior_; }
  const std::vector<BoundaryFacet>& boundary_facets() const { return boundary_; }
  Subdomain subdomain(int c) const { return subdomain_[c]; }

  std::array<Point, 3> cell_points(int c) const;
  double cell_area(int c) const { return areas_[c]; }
  double cell_diameter(int c) const;
  Point centroid(int c) const;
  double edge_length(int e) const;
  Point edge_midpoint(int e) const;

  /// Largest cell diameter.
  double max_diameter() const;

  Mesh scaled(double factor) const;

 private:
  void build_topology();

  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> cells_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> cell_edges_;
  std::vector<double> areas_;
  std::vector<InteriorFacet> interior_;
  std::vector<BoundaryFacet> boundary_;
  std::vector<Subdomain> subdomain_;
};

/// Structured triangulation of the unit square with `n_x` squares per edge.
///
/// Each square is split by one diagonal into two right triangles, except for
/// `crossed_squares` squares (spread evenly through the grid) which get a
/// centre vertex and four triangles. With `split_at_half` the line y = 0.5
/// must be a grid line, so `n_x` has to be even.
Mesh build_unit_square_mesh(int n_x, bool split_at_half, int crossed_squares = 0);

/// 30x30 grid with 285 crossed squares: 2370 cells, 1246 vertices, h = sqrt(2)/30.
Mesh reference_mesh();

/// (meas(T+) + meas(T-)) / (2 meas(e)).
double facet_length_scale(double area_plus, double area_minus, double facet_length);
double facet_length_scale(const Mesh& mesh, const InteriorFacet& facet);
/// Boundary facets use the interior formula with T+ = T-.
double facet_length_scale(const Mesh& mesh, const BoundaryFacet& facet);

/// Plain-text dump: vertices, cells and boundary facet blocks.
void write_mesh_text(const Mesh& mesh, std::ostream& out);

}  // namespace biotrom
