#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "xe/grid.hpp"

namespace xe::geometry {

// Constructive solid geometry tree for domain masks. Shapes are pure
// membership predicates; rasterization samples them at node positions.
struct Shape;
using ShapePtr = std::shared_ptr<const Shape>;

enum class ShapeKind {
  Ball,        // euclidean ball
  Box,
  HalfSpace,   // {x : <normal, x> <= offset}
  CuspSpine,   // cusp along +axis from a tip; width profile below
  PointCell,   // single lattice cell around a point
  Union,
  Intersection,
  Complement,
};

enum class SpineProfile { Exponential, Power };

struct Shape {
  ShapeKind kind;

  // Ball / PointCell / CuspSpine anchor
  Vec center{};
  double radius = 0.0;

  // Box
  Vec lo{}, hi{};

  // HalfSpace
  Vec normal{};
  double offset = 0.0;

  // CuspSpine: points x with 0 < t <= length and |x_perp| <= width(t),
  // where t is the coordinate along `axis` measured from `center`.
  // Exponential: width(t) = scale * exp(-kappa / t)   (Lebesgue-type cusp)
  // Power:       width(t) = scale * t^exponent
  int axis = 0;
  SpineProfile profile = SpineProfile::Exponential;
  double kappa = 1.0;
  double exponent = 2.0;
  double scale = 1.0;
  double length = 1.0;

  std::vector<ShapePtr> children;

  bool contains(const Vec& p, double h) const;
};

ShapePtr make_ball(const Vec& center, double radius);
ShapePtr make_box(const Vec& lo, const Vec& hi);
ShapePtr make_halfspace(const Vec& normal, double offset);
ShapePtr make_point_cell(const Vec& center);
ShapePtr make_spine_exp(int axis, const Vec& tip, double kappa, double scale,
                        double length);
ShapePtr make_spine_power(int axis, const Vec& tip, double exponent,
                          double scale, double length);
ShapePtr make_union(std::vector<ShapePtr> parts);
ShapePtr make_intersection(std::vector<ShapePtr> parts);
ShapePtr make_complement(ShapePtr inner);
ShapePtr make_difference(ShapePtr a, ShapePtr b);

// Node mask: entry true iff the node's position satisfies the predicate.
Mask rasterize(const Shape& shape, const Grid& grid);

std::int64_t count(const Mask& m);

// Host domain D, test domain Omega and the Omega boundary node set.
// Omega must be compactly contained in D: every Omega node at least
// two lattice steps (Chebyshev) away from the complement of D.
struct GridDomain {
  const Grid* grid = nullptr;
  Mask mask_D;
  Mask mask_Omega;
  std::vector<std::int64_t> boundary_nodes;  // outside Omega, stencil-adjacent to it

  GridDomain() = default;
  GridDomain(const Grid& g, Mask d, Mask omega);

  bool in_D(std::int64_t i) const { return mask_D[static_cast<std::size_t>(i)] != 0; }
  bool in_Omega(std::int64_t i) const {
    return mask_Omega[static_cast<std::size_t>(i)] != 0;
  }
};

GridDomain make_domain(const Grid& grid, const Shape& shape_D,
                       const Shape& shape_Omega);

// Snap a requested boundary point to the nearest boundary node of Omega.
// Errors out if the nearest boundary node is farther than one cell from
// the nearest node to y.
std::int64_t snap_boundary_point(const GridDomain& dom, const Vec& y);

// K_rho: nodes of the closed d-ball of radius rho about y, minus Omega.
// `dist` holds d(y, .) on the grid. The ball closure must stay inside the
// interior of D and K must be nonempty (it always contains the node at y).
std::vector<std::int64_t> compact_obstacle(const GridDomain& dom,
                                           std::int64_t y_node, double rho,
                                           const std::vector<double>& dist);

// Interior-of-D nodes: D-nodes all of whose stencil neighbors are D-nodes.
Mask interior_mask(const Grid& grid, const Mask& mask_D);

}  // namespace xe::geometry
