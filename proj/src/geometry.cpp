#include "xe/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xe::geometry {

bool Shape::contains(const Vec& p, double h) const {
  switch (kind) {
    case ShapeKind::Ball: {
      return norm(sub(p, center)) <= radius;
    }
    case ShapeKind::Box: {
      for (int a = 0; a < kMaxDim; ++a)
        if (p[a] < lo[a] || p[a] > hi[a]) return false;
      return true;
    }
    case ShapeKind::HalfSpace: {
      return dot(normal, p) <= offset;
    }
    case ShapeKind::PointCell: {
      for (int a = 0; a < kMaxDim; ++a)
        if (std::abs(p[a] - center[a]) > 0.5 * h) return false;
      return true;
    }
    case ShapeKind::CuspSpine: {
      double t = p[axis] - center[axis];
      if (t <= 0.0 || t > length) return false;
      double w;
      if (profile == SpineProfile::Exponential) {
        w = scale * std::exp(-kappa / t);
      } else {
        w = scale * std::pow(t, exponent);
      }
      double perp2 = 0.0;
      for (int a = 0; a < kMaxDim; ++a) {
        if (a == axis) continue;
        double da = p[a] - center[a];
        perp2 += da * da;
      }
      return perp2 <= w * w;
    }
    case ShapeKind::Union: {
      for (const auto& c : children)
        if (c->contains(p, h)) return true;
      return false;
    }
    case ShapeKind::Intersection: {
      for (const auto& c : children)
        if (!c->contains(p, h)) return false;
      return true;
    }
    case ShapeKind::Complement: {
      return !children[0]->contains(p, h);
    }
  }
  return false;
}

namespace {
ShapePtr make(ShapeKind k) {
  auto s = std::make_shared<Shape>();
  s->kind = k;
  return s;
}
Shape* mut(const ShapePtr& p) { return const_cast<Shape*>(p.get()); }
}  // namespace

ShapePtr make_ball(const Vec& center, double radius) {
  if (radius <= 0.0) throw ConfigError("shape: ball radius must be positive");
  auto s = make(ShapeKind::Ball);
  mut(s)->center = center;
  mut(s)->radius = radius;
  return s;
}

ShapePtr make_box(const Vec& lo, const Vec& hi) {
  auto s = make(ShapeKind::Box);
  mut(s)->lo = lo;
  mut(s)->hi = hi;
  return s;
}

ShapePtr make_halfspace(const Vec& normal, double offset) {
  if (norm(normal) == 0.0) throw ConfigError("shape: halfspace normal is zero");
  auto s = make(ShapeKind::HalfSpace);
  mut(s)->normal = normal;
  mut(s)->offset = offset;
  return s;
}

ShapePtr make_point_cell(const Vec& center) {
  auto s = make(ShapeKind::PointCell);
  mut(s)->center = center;
  return s;
}

ShapePtr make_spine_exp(int axis, const Vec& tip, double kappa, double scale,
                        double length) {
  if (axis < 0 || axis >= kMaxDim) throw ConfigError("shape: spine axis out of range");
  if (kappa <= 0.0 || scale <= 0.0 || length <= 0.0)
    throw ConfigError("shape: spine parameters must be positive");
  auto s = make(ShapeKind::CuspSpine);
  mut(s)->axis = axis;
  mut(s)->center = tip;
  mut(s)->profile = SpineProfile::Exponential;
  mut(s)->kappa = kappa;
  mut(s)->scale = scale;
  mut(s)->length = length;
  return s;
}

ShapePtr make_spine_power(int axis, const Vec& tip, double exponent,
                          double scale, double length) {
  if (axis < 0 || axis >= kMaxDim) throw ConfigError("shape: spine axis out of range");
  if (exponent < 1.0) throw ConfigError("shape: spine exponent must be >= 1");
  auto s = make(ShapeKind::CuspSpine);
  mut(s)->axis = axis;
  mut(s)->center = tip;
  mut(s)->profile = SpineProfile::Power;
  mut(s)->exponent = exponent;
  mut(s)->scale = scale;
  mut(s)->length = length;
  return s;
}

ShapePtr make_union(std::vector<ShapePtr> parts) {
  if (parts.empty()) throw ConfigError("shape: union needs children");
  auto s = make(ShapeKind::Union);
  mut(s)->children = std::move(parts);
  return s;
}

ShapePtr make_intersection(std::vector<ShapePtr> parts) {
  if (parts.empty()) throw ConfigError("shape: intersection needs children");
  auto s = make(ShapeKind::Intersection);
  mut(s)->children = std::move(parts);
  return s;
}

ShapePtr make_complement(ShapePtr inner) {
  if (!inner) throw ConfigError("shape: complement needs a child");
  auto s = make(ShapeKind::Complement);
  mut(s)->children = {std::move(inner)};
  return s;
}

ShapePtr make_difference(ShapePtr a, ShapePtr b) {
  return make_intersection({std::move(a), make_complement(std::move(b))});
}

Mask rasterize(const Shape& shape, const Grid& grid) {
  Mask m(static_cast<std::size_t>(grid.n_nodes), 0);
  const double h = grid.h();
  for (std::int64_t i = 0; i < grid.n_nodes; ++i) {
    if (shape.contains(grid.position(i), h)) m[static_cast<std::size_t>(i)] = 1;
  }
  return m;
}

std::int64_t count(const Mask& m) {
  std::int64_t c = 0;
  for (auto v : m) c += v;
  return c;
}

Mask interior_mask(const Grid& grid, const Mask& mask_D) {
  Stencil st(grid);
  Mask interior(mask_D.size(), 0);
  for (std::int64_t i = 0; i < grid.n_nodes; ++i) {
    if (!mask_D[static_cast<std::size_t>(i)]) continue;
    IVec iv = grid.coords(i);
    bool ok = true;
    for (std::size_t k = 0; k < st.offsets.size() && ok; ++k) {
      IVec nb = iv;
      for (int a = 0; a < grid.dim(); ++a) nb[a] += st.offsets[k][a];
      if (!grid.in_bounds(nb) || !mask_D[static_cast<std::size_t>(grid.index(nb))])
        ok = false;
    }
    if (ok) interior[static_cast<std::size_t>(i)] = 1;
  }
  return interior;
}

GridDomain::GridDomain(const Grid& g, Mask d, Mask omega)
    : grid(&g), mask_D(std::move(d)), mask_Omega(std::move(omega)) {
  if (mask_D.size() != static_cast<std::size_t>(g.n_nodes) ||
      mask_Omega.size() != static_cast<std::size_t>(g.n_nodes))
    throw ConfigError("domain: mask size mismatch");

  // Compact containment: every Omega node >= 2 lattice steps from non-D.
  const int d2 = 2;
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    if (!mask_Omega[static_cast<std::size_t>(i)]) continue;
    if (!mask_D[static_cast<std::size_t>(i)])
      throw GeometryError("domain: Omega is not contained in D");
    IVec iv = g.coords(i);
    IVec nb;
    for (int d0 = -d2; d0 <= d2; ++d0)
      for (int d1 = -d2; d1 <= d2; ++d1)
        for (int dz = (g.dim() == 3 ? -d2 : 0); dz <= (g.dim() == 3 ? d2 : 0); ++dz) {
          nb = {iv[0] + d0, iv[1] + d1, iv[2] + dz};
          if (!g.in_bounds(nb) ||
              !mask_D[static_cast<std::size_t>(g.index(nb))])
            throw GeometryError(
                "domain: Omega is not compactly contained in D (margin < 2 cells)");
        }
  }

  Stencil st(g);
  std::int64_t n_omega = count(mask_Omega);
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    if (mask_Omega[static_cast<std::size_t>(i)]) continue;
    IVec iv = g.coords(i);
    for (std::size_t k = 0; k < st.offsets.size(); ++k) {
      IVec nb = iv;
      for (int a = 0; a < g.dim(); ++a) nb[a] += st.offsets[k][a];
      if (g.in_bounds(nb) && mask_Omega[static_cast<std::size_t>(g.index(nb))]) {
        boundary_nodes.push_back(i);
        break;
      }
    }
  }
  if (n_omega > 0 && n_omega < g.n_nodes && boundary_nodes.empty())
    throw GeometryError("domain: nonempty proper Omega has empty boundary");
}

GridDomain make_domain(const Grid& grid, const Shape& shape_D,
                       const Shape& shape_Omega) {
  return GridDomain(grid, rasterize(shape_D, grid), rasterize(shape_Omega, grid));
}

std::int64_t snap_boundary_point(const GridDomain& dom, const Vec& y) {
  if (dom.boundary_nodes.empty())
    throw GeometryError("snap: Omega has no boundary nodes");
  const Grid& g = *dom.grid;
  double best = std::numeric_limits<double>::infinity();
  std::int64_t best_node = -1;
  for (std::int64_t b : dom.boundary_nodes) {
    double d = norm(sub(g.position(b), y));
    if (d < best) {
      best = d;
      best_node = b;
    }
  }
  // "y on the boundary" is enforced up to one cell of slack.
  if (best > g.h() * std::sqrt(double(g.dim())) * 1.0001)
    throw GeometryError("snap: y is farther than one cell from the Omega boundary");
  return best_node;
}

std::vector<std::int64_t> compact_obstacle(const GridDomain& dom,
                                           std::int64_t y_node, double rho,
                                           const std::vector<double>& dist) {
  const Grid& g = *dom.grid;
  if (rho < 2.0 * g.h() * (1.0 - 1e-12))
    throw ConfigError("compact_obstacle: rho must be at least 2h");
  if (dist.size() != static_cast<std::size_t>(g.n_nodes))
    throw ConfigError("compact_obstacle: distance field size mismatch");

  Mask interior = interior_mask(g, dom.mask_D);
  std::vector<std::int64_t> K;
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    double d = dist[static_cast<std::size_t>(i)];
    if (!(d <= rho)) continue;
    if (!interior[static_cast<std::size_t>(i)])
      throw GeometryError("compact_obstacle: ball of radius rho escapes the interior of D");
    if (!dom.in_Omega(i)) K.push_back(i);
  }
  if (K.empty())
    throw GeometryError("compact_obstacle: K is empty, contradicting y on the boundary");
  if (std::find(K.begin(), K.end(), y_node) == K.end())
    throw GeometryError("compact_obstacle: K does not contain the node at y");
  return K;
}

}  // namespace xe::geometry
