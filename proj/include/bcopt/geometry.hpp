#pragma once

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

namespace bcopt {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
double distance(Point a, Point b);

/// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Rectangle {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;
};

using Triangle = std::array<int, 3>;

/// Conforming triangulation of a convex polygon. Immutable once built; the
/// constructor checks orientation, conformity and the boundary flags.
class Mesh {
 public:
  Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
       std::vector<bool> boundary_flags);

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const Point& vertex(std::size_t i) const { return vertices_[i]; }
  const Triangle& triangle(std::size_t c) const { return triangles_[c]; }
  bool is_boundary(std::size_t i) const { return boundary_[i]; }
  const std::vector<bool>& boundary_flags() const { return boundary_; }

  double area(std::size_t c) const { return areas_[c]; }
  double total_area() const;
  Point centroid(std::size_t c) const;
  /// Constant gradient of the barycentric coordinate of local vertex k on cell c.
  const std::array<double, 2>& grad_lambda(std::size_t c, int k) const { return grads_[c][k]; }
  /// Physical point for barycentric coordinates on cell c.
  Point map_to_physical(std::size_t c, const std::array<double, 3>& lambda) const;

  double h_max() const { return h_max_; }
  /// Edges that belong to exactly one triangle, as vertex pairs.
  const std::vector<std::pair<int, int>>& boundary_edges() const { return boundary_edges_; }
  /// Pairs of triangles sharing an edge, lower index first.
  const std::vector<std::pair<int, int>>& cell_neighbours() const { return neighbours_; }

 private:
  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<bool> boundary_;
  std::vector<double> areas_;
  std::vector<std::array<std::array<double, 2>, 3>> grads_;
  std::vector<std::pair<int, int>> boundary_edges_;
  std::vector<std::pair<int, int>> neighbours_;
  double h_max_ = 0.0;
};

/// Structured mesh of an axis-aligned rectangle: n x n cells, each split
/// along its SW-NE diagonal.
Mesh build_structured_mesh(int n, const Rectangle& domain = {});

struct BarycentricLocation {
  std::size_t triangle_index = 0;
  std::array<double, 3> lambda{};
};

/// Finds the lowest-index triangle containing p. Throws PointOutsideDomain
/// when p is farther than 1e-12 * h_max outside every triangle.
BarycentricLocation locate_point(const Mesh& mesh, Point p);

/// Sparse nodal vector, sorted by index.
using SparseEntries = std::vector<std::pair<int, double>>;

/// Entries phi_i(p) of the P1 hat functions at p: the load vector of a
/// point mass at p.
SparseEntries dirac_load_vector(const Mesh& mesh, Point p);

/// P1 interpolation of a nodal field at p.
double evaluate_at(const Mesh& mesh, const std::vector<double>& nodal, Point p);
double evaluate_at(const Mesh& mesh, const std::vector<double>& nodal,
                   const BarycentricLocation& loc);

/// Distance from p to the nearest boundary edge.
double distance_to_boundary(const Mesh& mesh, Point p);

struct QuadratureRule {
  std::vector<std::array<double, 3>> points;  // barycentric
  std::vector<double> weights;                 // sum to 1/2
  int degree = 0;
};

/// Symmetric rules exact for polynomials of total degree <= `degree` on the
/// reference triangle. Supported: 1, 2, 3.
const QuadratureRule& quadrature_rule(int degree);

}  // namespace bcopt
