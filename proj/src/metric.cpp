#include "xe/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace xe::metric {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

DistanceField control_distance(const fields::FieldFamily& family,
                               const Vec& source, const Grid& grid) {
  if (!grid.box.contains(source))
    throw ConfigError("control_distance: source outside the bounding box");
  return control_distance_from(family, {grid.index(grid.nearest(source))}, grid);
}

DistanceField control_distance_from(const fields::FieldFamily& family,
                                    const std::vector<std::int64_t>& sources,
                                    const Grid& grid) {
  if (sources.empty())
    throw ConfigError("control_distance: no source nodes");
  const int dim = grid.dim();
  const double h = grid.h();
  Stencil st(grid);
  const std::size_t deg = st.offsets.size();

  // Unit directions and Euclidean lengths per stencil edge.
  std::vector<Vec> dirs(deg);
  for (std::size_t k = 0; k < deg; ++k) {
    for (int a = 0; a < dim; ++a) dirs[k][a] = st.offsets[k][a] / st.lengths[k];
  }

  // Constant structure matrices admit one speed per stencil direction.
  const bool const_speed = family.constant_structure();
  std::vector<double> fixed_cost(deg, kInf);
  if (const_speed) {
    SymMat A = family.structure_matrix(grid.position(std::int64_t{0}));
    for (std::size_t k = 0; k < deg; ++k) {
      double sp = fields::subunit_speed(A, dim, dirs[k]);
      if (sp > 0.0) fixed_cost[k] = st.lengths[k] * h / sp;
    }
  }

  DistanceField out;
  out.grid = &grid;
  out.source = sources.front();
  out.values.assign(static_cast<std::size_t>(grid.n_nodes), kInf);

  using Item = std::pair<double, std::int64_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  for (std::int64_t s : sources) {
    out.values[static_cast<std::size_t>(s)] = 0.0;
    heap.push({0.0, s});
  }

  std::vector<std::uint8_t> done(static_cast<std::size_t>(grid.n_nodes), 0);
  while (!heap.empty()) {
    auto [d, i] = heap.top();
    heap.pop();
    if (done[static_cast<std::size_t>(i)]) continue;
    done[static_cast<std::size_t>(i)] = 1;
    IVec iv = grid.coords(i);
    Vec p = grid.position(iv);
    for (std::size_t k = 0; k < deg; ++k) {
      IVec nv = iv;
      for (int a = 0; a < dim; ++a) nv[a] += st.offsets[k][a];
      if (!grid.in_bounds(nv)) continue;
      std::int64_t j = i + st.flat_offsets[k];
      if (done[static_cast<std::size_t>(j)]) continue;
      double cost;
      if (const_speed) {
        cost = fixed_cost[k];
      } else {
        Vec mid = p;
        for (int a = 0; a < dim; ++a) mid[a] += 0.5 * st.offsets[k][a] * h;
        double sp = fields::subunit_speed(family, mid, dirs[k]);
        if (sp <= 0.0) continue;  // direction leaves the admissible cone
        cost = st.lengths[k] * h / sp;
      }
      if (cost == kInf) continue;
      double nd = d + cost;
      if (nd < out.values[static_cast<std::size_t>(j)]) {
        out.values[static_cast<std::size_t>(j)] = nd;
        heap.push({nd, j});
      }
    }
  }
  for (double v : out.values)
    if (v == kInf) ++out.unreachable;
  return out;
}

double metrication_factor(int dim) {
  // Max over directions of the stencil path factor; attained between the
  // axis and the diagonal. 2D: sec(pi/8). 3D is slightly larger.
  double worst = 1.0;
  const int n = 64;
  for (int i = 0; i <= n; ++i) {
    double t0 = double(i) / n;
    if (dim == 2) {
      Vec v{1.0, t0, 0.0};
      worst = std::max(worst, stencil_path_factor(v, 2));
    } else {
      for (int j = 0; j <= n; ++j) {
        Vec v{1.0, t0, t0 * j / n};
        worst = std::max(worst, stencil_path_factor(v, 3));
      }
    }
  }
  return worst;
}

double stencil_path_factor(const Vec& dir, int dim) {
  // Sort |components| descending: the optimal stencil path uses diagonal
  // steps for the smaller components and axis steps for the remainder.
  std::array<double, kMaxDim> c{std::abs(dir[0]), std::abs(dir[1]),
                                std::abs(dir[2])};
  std::sort(c.begin(), c.begin() + dim, std::greater<double>());
  double len = norm({c[0], c[1], c[2]});
  if (len == 0.0) return 1.0;
  double path;
  if (dim == 2) {
    path = (c[0] - c[1]) + std::sqrt(2.0) * c[1];
  } else {
    path = (c[0] - c[1]) + std::sqrt(2.0) * (c[1] - c[2]) +
           std::sqrt(3.0) * c[2];
  }
  return path / len;
}

std::vector<std::int64_t> ball(const DistanceField& dist, double r) {
  if (r <= 0.0) throw ConfigError("ball: radius must be positive");
  std::vector<std::int64_t> nodes;
  for (std::int64_t i = 0; i < dist.grid->n_nodes; ++i)
    if (dist.values[static_cast<std::size_t>(i)] < r) nodes.push_back(i);
  return nodes;
}

VolumeProfile volume_profile(const DistanceField& dist,
                             const std::vector<double>& radii) {
  const Grid& g = *dist.grid;
  double hN = std::pow(g.h(), g.dim());
  VolumeProfile vp;
  vp.center = g.position(dist.source);
  vp.radii = radii;
  for (double r : radii) {
    auto br = ball(dist, r);
    auto b2r = ball(dist, 2.0 * r);
    bool trunc = false;
    for (std::int64_t i : b2r)
      if (g.on_face(g.coords(i))) trunc = true;
    vp.volumes.push_back(double(br.size()) * hN);
    vp.doubling_ratios.push_back(br.empty() ? 0.0
                                            : double(b2r.size()) / double(br.size()));
    vp.truncated.push_back(trunc ? 1 : 0);
  }
  vp.A_est = 0.0;
  for (double q : vp.doubling_ratios) vp.A_est = std::max(vp.A_est, q);
  vp.Q_est = vp.A_est > 0.0 ? std::log2(vp.A_est) : 0.0;
  return vp;
}

ReverseDoubling reverse_doubling(const VolumeProfile& profile) {
  if (profile.radii.size() < 3)
    throw ConfigError("reverse_doubling: need at least 3 radii");
  ReverseDoubling rd;
  rd.beta_est = 0.0;
  for (double q : profile.doubling_ratios)
    if (q > 0.0) rd.beta_est = std::max(rd.beta_est, 1.0 / q);
  rd.mu_est = rd.beta_est > 0.0 ? std::log2(1.0 / rd.beta_est) : 0.0;
  rd.violated = rd.beta_est > 1.0 - 1e-6;
  return rd;
}

Vec node_gradient(const ScalarField& u, std::int64_t node) {
  const Grid& g = *u.grid;
  const double h = g.h();
  IVec iv = g.coords(node);
  Vec grad{0.0, 0.0, 0.0};
  for (int a = 0; a < g.dim(); ++a) {
    IVec up = iv, dn = iv;
    up[a] += 1;
    dn[a] -= 1;
    bool has_up = up[a] < g.dims[a];
    bool has_dn = dn[a] >= 0;
    double uu = has_up ? u.values[static_cast<std::size_t>(g.index(up))] : 0.0;
    double ud = has_dn ? u.values[static_cast<std::size_t>(g.index(dn))] : 0.0;
    double uc = u.values[static_cast<std::size_t>(node)];
    if (has_up && has_dn)
      grad[a] = (uu - ud) / (2.0 * h);
    else if (has_up)
      grad[a] = (uu - uc) / h;
    else if (has_dn)
      grad[a] = (uc - ud) / h;
  }
  return grad;
}

double x_gradient_norm(const fields::FieldFamily& family, const ScalarField& u,
                       std::int64_t node) {
  Vec grad = node_gradient(u, node);
  Vec x = u.grid->position(node);
  double s = 0.0;
  for (int j = 0; j < family.count(); ++j) {
    double d = dot(family.evaluate(j, x), grad);
    s += d * d;
  }
  return std::sqrt(s);
}

double poincare_ratio(const fields::FieldFamily& family, const ScalarField& u,
                      const std::vector<std::int64_t>& ball_r,
                      const std::vector<std::int64_t>& ball_2r, double r) {
  if (ball_r.empty() || ball_2r.empty())
    throw ConfigError("poincare_ratio: balls must be nonempty");
  double mean = 0.0;
  for (std::int64_t i : ball_r) mean += u.values[static_cast<std::size_t>(i)];
  mean /= double(ball_r.size());
  double num = 0.0;
  for (std::int64_t i : ball_r)
    num += std::abs(u.values[static_cast<std::size_t>(i)] - mean);
  num /= double(ball_r.size());

  double den = 0.0;
  for (std::int64_t i : ball_2r) den += x_gradient_norm(family, u, i);
  den = r * den / double(ball_2r.size());

  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

int shell_components(const DistanceField& dist, double r) {
  const Grid& g = *dist.grid;
  Stencil st(g);
  // Surface layer of the ball: inside nodes with an outside stencil
  // neighbor. A fixed-thickness metric slab would fall below one lattice
  // cell wherever the admissible speed is small and fragment spuriously.
  std::vector<std::int64_t> shell;
  std::vector<std::int64_t> mark(static_cast<std::size_t>(g.n_nodes), -1);
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    double d = dist.values[static_cast<std::size_t>(i)];
    if (!(d < r)) continue;
    IVec iv = g.coords(i);
    bool surface = false;
    for (std::size_t k = 0; k < st.offsets.size() && !surface; ++k) {
      IVec nv = iv;
      for (int a = 0; a < g.dim(); ++a) nv[a] += st.offsets[k][a];
      if (!g.in_bounds(nv)) {
        surface = true;
      } else {
        double dn = dist.values[static_cast<std::size_t>(g.index(nv))];
        if (!(dn < r)) surface = true;
      }
    }
    if (surface) {
      mark[static_cast<std::size_t>(i)] = 0;
      shell.push_back(i);
    }
  }
  int comps = 0;
  std::vector<std::int64_t> stack;
  for (std::int64_t s : shell) {
    if (mark[static_cast<std::size_t>(s)] != 0) continue;
    ++comps;
    mark[static_cast<std::size_t>(s)] = comps;
    stack.push_back(s);
    while (!stack.empty()) {
      std::int64_t i = stack.back();
      stack.pop_back();
      IVec iv = g.coords(i);
      for (std::size_t k = 0; k < st.offsets.size(); ++k) {
        IVec nv = iv;
        for (int a = 0; a < g.dim(); ++a) nv[a] += st.offsets[k][a];
        if (!g.in_bounds(nv)) continue;
        std::int64_t j = g.index(nv);
        if (mark[static_cast<std::size_t>(j)] == 0) {
          mark[static_cast<std::size_t>(j)] = comps;
          stack.push_back(j);
        }
      }
    }
  }
  return comps;
}

}  // namespace xe::metric
