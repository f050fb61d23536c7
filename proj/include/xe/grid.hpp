#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace xe {

// Maximum spatial dimension supported by the toolkit.
inline constexpr int kMaxDim = 3;

using Vec = std::array<double, kMaxDim>;
using IVec = std::array<int, kMaxDim>;

// Dense symmetric N x N matrix, stored as a full 3x3 block (unused
// entries stay zero so all kernels can loop over kMaxDim uniformly).
using SymMat = std::array<double, kMaxDim * kMaxDim>;

inline double dot(const Vec& a, const Vec& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec sub(const Vec& a, const Vec& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Vec matvec(const SymMat& m, const Vec& v) {
  Vec r{};
  for (int i = 0; i < kMaxDim; ++i)
    for (int j = 0; j < kMaxDim; ++j) r[i] += m[i * kMaxDim + j] * v[j];
  return r;
}

inline double quad_form(const SymMat& m, const Vec& v) {
  return dot(v, matvec(m, v));
}

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class GeometryError : public std::runtime_error {
 public:
  explicit GeometryError(const std::string& what) : std::runtime_error(what) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Axis-aligned box discretized by a uniform lattice of nodes. Node (i_0..i_{N-1})
// sits at lo + i*h; there are n_cells[a]+1 node layers along axis a. The cell
// width h must be identical along every axis (within 1e-12 relative).
struct BoundingBox {
  int dim = 2;
  Vec lo{};
  Vec hi{};
  IVec n_cells{};
  double h = 0.0;

  BoundingBox() = default;
  BoundingBox(int dim_, const Vec& lo_, const Vec& hi_, const IVec& n_cells_)
      : dim(dim_), lo(lo_), hi(hi_), n_cells(n_cells_) {
    if (dim < 1 || dim > kMaxDim) throw ConfigError("box: dim must be 1..3");
    for (int a = 0; a < dim; ++a) {
      if (hi[a] <= lo[a]) throw ConfigError("box: hi must exceed lo");
      if (n_cells[a] < 1) throw ConfigError("box: n_cells must be positive");
    }
    h = (hi[0] - lo[0]) / n_cells[0];
    for (int a = 1; a < dim; ++a) {
      double ha = (hi[a] - lo[a]) / n_cells[a];
      if (std::abs(ha - h) > 1e-12 * std::max(std::abs(ha), std::abs(h)))
        throw ConfigError("box: cell width must be uniform across axes");
    }
  }

  bool contains(const Vec& p) const {
    for (int a = 0; a < dim; ++a)
      if (p[a] < lo[a] || p[a] > hi[a]) return false;
    return true;
  }
};

// Node lattice bookkeeping: flat indices, strides, stencil offsets.
struct Grid {
  BoundingBox box;
  IVec dims{1, 1, 1};      // node counts per axis
  std::array<std::int64_t, kMaxDim> strides{0, 0, 0};
  std::int64_t n_nodes = 0;

  Grid() = default;
  explicit Grid(const BoundingBox& b) : box(b) {
    for (int a = 0; a < kMaxDim; ++a) dims[a] = (a < b.dim) ? b.n_cells[a] + 1 : 1;
    std::int64_t s = 1;
    for (int a = b.dim - 1; a >= 0; --a) {
      strides[a] = s;
      s *= dims[a];
    }
    n_nodes = s;
  }

  int dim() const { return box.dim; }
  double h() const { return box.h; }

  std::int64_t index(const IVec& iv) const {
    std::int64_t idx = 0;
    for (int a = 0; a < box.dim; ++a) idx += strides[a] * iv[a];
    return idx;
  }

  IVec coords(std::int64_t idx) const {
    IVec iv{0, 0, 0};
    for (int a = 0; a < box.dim; ++a) {
      iv[a] = static_cast<int>(idx / strides[a]);
      idx -= iv[a] * strides[a];
    }
    return iv;
  }

  Vec position(const IVec& iv) const {
    Vec p{0.0, 0.0, 0.0};
    for (int a = 0; a < box.dim; ++a) p[a] = box.lo[a] + iv[a] * box.h;
    return p;
  }

  Vec position(std::int64_t idx) const { return position(coords(idx)); }

  bool in_bounds(const IVec& iv) const {
    for (int a = 0; a < box.dim; ++a)
      if (iv[a] < 0 || iv[a] >= dims[a]) return false;
    return true;
  }

  // Nearest node to an arbitrary point of the box.
  IVec nearest(const Vec& p) const {
    IVec iv{0, 0, 0};
    for (int a = 0; a < box.dim; ++a) {
      int i = static_cast<int>(std::lround((p[a] - box.lo[a]) / box.h));
      if (i < 0) i = 0;
      if (i >= dims[a]) i = dims[a] - 1;
      iv[a] = i;
    }
    return iv;
  }

  bool on_face(const IVec& iv) const {
    for (int a = 0; a < box.dim; ++a)
      if (iv[a] == 0 || iv[a] == dims[a] - 1) return true;
    return false;
  }
};

// Full 3^N-1 neighbor stencil (all sign patterns except the origin),
// shared by the metric graph and the nodal element coupling pattern.
struct Stencil {
  std::vector<IVec> offsets;                // neighbor offsets, no center
  std::vector<std::int64_t> flat_offsets;   // same, as flat index deltas
  std::vector<double> lengths;              // Euclidean length in units of h

  Stencil(const Grid& g) {
    const int d = g.dim();
    IVec delta{0, 0, 0};
    std::array<int, 3> range{-1, 0, 1};
    auto push = [&](const IVec& dv) {
      bool zero = true;
      for (int a = 0; a < d; ++a) zero = zero && dv[a] == 0;
      if (zero) return;
      offsets.push_back(dv);
      std::int64_t f = 0;
      double len2 = 0.0;
      for (int a = 0; a < d; ++a) {
        f += g.strides[a] * dv[a];
        len2 += double(dv[a]) * dv[a];
      }
      flat_offsets.push_back(f);
      lengths.push_back(std::sqrt(len2));
    };
    if (d == 1) {
      for (int i : range) push({i, 0, 0});
    } else if (d == 2) {
      for (int i : range)
        for (int j : range) push({i, j, 0});
    } else {
      for (int i : range)
        for (int j : range)
          for (int k : range) push({i, j, k});
    }
    (void)delta;
  }
};

using Mask = std::vector<std::uint8_t>;

// Nodal scalar values over a grid; the optional support mask marks where
// the values are meaningful (empty mask = everywhere).
struct ScalarField {
  const Grid* grid = nullptr;
  std::vector<double> values;
  Mask support;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0)
      : grid(&g), values(static_cast<std::size_t>(g.n_nodes), fill) {}
};

}  // namespace xe
