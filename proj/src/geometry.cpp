#include "bcopt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "bcopt/error.hpp"

namespace bcopt {

namespace {

double signed_area(Point a, Point b, Point c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

// Barycentric coordinates of p with respect to the triangle (a, b, c).
std::array<double, 3> barycentric(Point a, Point b, Point c, Point p) {
  const double total = signed_area(a, b, c);
  std::array<double, 3> lambda{signed_area(p, b, c) / total, signed_area(a, p, c) / total, 0.0};
  lambda[2] = 1.0 - lambda[0] - lambda[1];
  return lambda;
}

}  // namespace

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
           std::vector<bool> boundary_flags)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_(std::move(boundary_flags)) {
  const int nv = static_cast<int>(vertices_.size());
  if (nv < 3 || triangles_.empty()) {
    throw InvalidArgument("mesh needs at least 3 vertices and 1 triangle");
  }
  if (boundary_.size() != vertices_.size()) {
    throw InvalidArgument("mesh: boundary flag count does not match vertex count");
  }
  for (const Point& p : vertices_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw InvalidArgument("mesh: non-finite vertex coordinate");
    }
  }

  areas_.resize(triangles_.size());
  grads_.resize(triangles_.size());
  // edge (lo, hi) -> (triangle, traversed lo->hi)
  std::map<std::pair<int, int>, std::vector<std::pair<int, bool>>> edges;
  for (std::size_t c = 0; c < triangles_.size(); ++c) {
    const Triangle& t = triangles_[c];
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= nv) {
        std::ostringstream msg;
        msg << "mesh: triangle " << c << " references vertex " << t[k] << " out of range";
        throw InvalidArgument(msg.str());
      }
    }
    const Point a = vertices_[t[0]], b = vertices_[t[1]], q = vertices_[t[2]];
    const double area = signed_area(a, b, q);
    if (!(area > 0.0)) {
      std::ostringstream msg;
      msg << "mesh: triangle " << c << " has non-positive signed area " << area;
      throw InvalidArgument(msg.str());
    }
    areas_[c] = area;
    // grad lambda_k = rot(opposite edge) / (2 area)
    for (int k = 0; k < 3; ++k) {
      const Point p1 = vertices_[t[(k + 1) % 3]];
      const Point p2 = vertices_[t[(k + 2) % 3]];
      grads_[c][k] = {(p1.y - p2.y) / (2.0 * area), (p2.x - p1.x) / (2.0 * area)};
    }
    for (int k = 0; k < 3; ++k) {
      const int i = t[k], j = t[(k + 1) % 3];
      h_max_ = std::max(h_max_, distance(vertices_[i], vertices_[j]));
      edges[{std::min(i, j), std::max(i, j)}].push_back({static_cast<int>(c), i < j});
    }
  }

  std::vector<bool> on_boundary_edge(nv, false);
  for (const auto& [edge, owners] : edges) {
    if (owners.size() > 2) {
      throw InvalidArgument("mesh: edge shared by more than two triangles");
    }
    if (owners.size() == 2) {
      if (owners[0].second == owners[1].second) {
        throw InvalidArgument("mesh: inconsistent orientation across a shared edge");
      }
      neighbours_.emplace_back(std::min(owners[0].first, owners[1].first),
                               std::max(owners[0].first, owners[1].first));
    } else {
      // keep the counterclockwise traversal direction of the owning triangle
      boundary_edges_.push_back(owners[0].second ? edge : std::make_pair(edge.second, edge.first));
      on_boundary_edge[edge.first] = true;
      on_boundary_edge[edge.second] = true;
    }
  }
  std::sort(neighbours_.begin(), neighbours_.end());

  // Boundary edges of a convex polygon leave every vertex on their left.
  // An interior gap or hanging node produces a one-sided edge that fails this.
  for (const auto& [i, j] : boundary_edges_) {
    const Point a = vertices_[i], b = vertices_[j];
    const double len = distance(a, b);
    for (const Point& p : vertices_) {
      if (signed_area(a, b, p) < -1e-10 * len * h_max_) {
        throw InvalidArgument("mesh: not a conforming triangulation of a convex polygon");
      }
    }
  }
  for (int i = 0; i < nv; ++i) {
    if (on_boundary_edge[i] != boundary_[i]) {
      std::ostringstream msg;
      msg << "mesh: vertex " << i << (on_boundary_edge[i] ? " lies on the boundary but is not flagged"
                                                          : " is interior but flagged as boundary");
      throw InvalidArgument(msg.str());
    }
  }
}

double Mesh::total_area() const {
  double sum = 0.0;
  for (double a : areas_) sum += a;
  return sum;
}

Point Mesh::centroid(std::size_t c) const {
  const Triangle& t = triangles_[c];
  return {(vertices_[t[0]].x + vertices_[t[1]].x + vertices_[t[2]].x) / 3.0,
          (vertices_[t[0]].y + vertices_[t[1]].y + vertices_[t[2]].y) / 3.0};
}

Point Mesh::map_to_physical(std::size_t c, const std::array<double, 3>& lambda) const {
  const Triangle& t = triangles_[c];
  Point p{0.0, 0.0};
  for (int k = 0; k < 3; ++k) p = p + lambda[k] * vertices_[t[k]];
  return p;
}

Mesh build_structured_mesh(int n, const Rectangle& domain) {
  if (n < 1) throw InvalidArgument("build_structured_mesh: n must be >= 1");
  const double lx = domain.x1 - domain.x0, ly = domain.y1 - domain.y0;
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
    throw InvalidArgument("build_structured_mesh: rectangle must have positive side lengths");
  }
  std::vector<Point> vertices;
  std::vector<bool> flags;
  vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      // i == n hits x1 exactly so refinement halves h_max exactly
      const double x = i == n ? domain.x1 : domain.x0 + lx * i / n;
      const double y = j == n ? domain.y1 : domain.y0 + ly * j / n;
      vertices.push_back({x, y});
      flags.push_back(i == 0 || j == 0 || i == n || j == n);
    }
  }
  std::vector<Triangle> triangles;
  triangles.reserve(2 * static_cast<std::size_t>(n) * n);
  const auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int sw = id(i, j), se = id(i + 1, j), nw = id(i, j + 1), ne = id(i + 1, j + 1);
      triangles.push_back({sw, se, ne});
      triangles.push_back({sw, ne, nw});
    }
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(flags));
}

BarycentricLocation locate_point(const Mesh& mesh, Point p) {
  constexpr double tol = 1e-12;
  for (std::size_t c = 0; c < mesh.num_triangles(); ++c) {
    const Triangle& t = mesh.triangle(c);
    const Point a = mesh.vertex(t[0]), b = mesh.vertex(t[1]), q = mesh.vertex(t[2]);
    const double slack = tol * mesh.h_max();
    if (p.x < std::min({a.x, b.x, q.x}) - slack || p.x > std::max({a.x, b.x, q.x}) + slack ||
        p.y < std::min({a.y, b.y, q.y}) - slack || p.y > std::max({a.y, b.y, q.y}) + slack) {
      continue;
    }
    auto lambda = barycentric(a, b, q, p);
    if (std::min({lambda[0], lambda[1], lambda[2]}) < -tol) continue;
    double sum = 0.0;
    for (double& l : lambda) {
      l = std::clamp(l, 0.0, 1.0);
      sum += l;
    }
    for (double& l : lambda) l /= sum;
    return {c, lambda};
  }
  std::ostringstream msg;
  msg << "locate_point: point (" << p.x << ", " << p.y << ") is outside the domain";
  throw PointOutsideDomain(msg.str());
}

SparseEntries dirac_load_vector(const Mesh& mesh, Point p) {
  const BarycentricLocation loc = locate_point(mesh, p);
  const Triangle& t = mesh.triangle(loc.triangle_index);
  SparseEntries entries;
  for (int k = 0; k < 3; ++k) {
    if (loc.lambda[k] != 0.0) entries.emplace_back(t[k], loc.lambda[k]);
  }
  std::sort(entries.begin(), entries.end());
  return entries;
}

double evaluate_at(const Mesh& mesh, const std::vector<double>& nodal,
                   const BarycentricLocation& loc) {
  const Triangle& t = mesh.triangle(loc.triangle_index);
  return loc.lambda[0] * nodal[t[0]] + loc.lambda[1] * nodal[t[1]] + loc.lambda[2] * nodal[t[2]];
}

double evaluate_at(const Mesh& mesh, const std::vector<double>& nodal, Point p) {
  return evaluate_at(mesh, nodal, locate_point(mesh, p));
}

double distance_to_boundary(const Mesh& mesh, Point p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [i, j] : mesh.boundary_edges()) {
    const Point a = mesh.vertex(i), b = mesh.vertex(j);
    const Point ab = b - a, ap = p - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    const double s = std::clamp((ap.x * ab.x + ap.y * ab.y) / len2, 0.0, 1.0);
    best = std::min(best, distance(p, a + s * ab));
  }
  return best;
}

const QuadratureRule& quadrature_rule(int degree) {
  static const QuadratureRule centroid{{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}}, {0.5}, 1};
  static const QuadratureRule three_point{
      {{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
       {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
       {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}},
      {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0},
      2};
  // Six-point symmetric rule with positive weights, exact through degree 4.
  static const QuadratureRule six_point = [] {
    constexpr double a1 = 0.445948490915965, w1 = 0.223381589678011 / 2.0;
    constexpr double a2 = 0.091576213509771, w2 = 0.109951743655322 / 2.0;
    QuadratureRule rule;
    rule.degree = 3;
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
      const double b = 1.0 - 2.0 * a;
      rule.points.push_back({a, a, b});
      rule.points.push_back({a, b, a});
      rule.points.push_back({b, a, a});
      rule.weights.insert(rule.weights.end(), 3, w);
    }
    return rule;
  }();
  switch (degree) {
    case 1:
      return centroid;
    case 2:
      return three_point;
    case 3:
      return six_point;
    default:
      throw InvalidArgument("quadrature_rule: unsupported degree " + std::to_string(degree));
  }
}

}  // namespace bcopt
