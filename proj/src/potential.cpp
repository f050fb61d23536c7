#include "xe/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace xe::potential {

CapacityResult capacity(const solver::EnergyForm& form,
                        const std::vector<std::int64_t>& K,
                        const solver::SolverOptions& opts,
                        const ScalarField* warm_start) {
  const Grid& g = form.grid();
  CapacityResult res;
  res.K = K;
  res.u0 = ScalarField(g, 0.0);
  if (K.empty()) return res;  // cap(empty) = 0, u identically zero

  for (std::int64_t i : K)
    if (!form.interior_D()[static_cast<std::size_t>(i)])
      throw ConfigError("capacity: K touches the boundary of D");

  Mask free = form.interior_D();
  for (std::int64_t i : K) free[static_cast<std::size_t>(i)] = 0;

  std::vector<double>& u = res.u0.values;
  if (warm_start && warm_start->values.size() == u.size()) u = warm_start->values;
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    if (!free[static_cast<std::size_t>(i)]) u[static_cast<std::size_t>(i)] = 0.0;
  }
  for (std::int64_t i : K) u[static_cast<std::size_t>(i)] = 1.0;

  solver::DirichletSolver ds(form, free);
  res.stats = ds.solve(u, {}, opts);

  res.capacity = form.energy(u);
  res.measure.reserve(K.size());
  res.total_measure = 0.0;
  for (std::int64_t i : K) {
    double m = form.apply_at(u, i);
    res.measure.push_back(m);
    res.total_measure += m;
    if (m < 0.0) ++res.negative_measure_entries;
  }
  res.u_min = *std::min_element(u.begin(), u.end());
  res.u_max = *std::max_element(u.begin(), u.end());
  return res;
}

GreenColumn green_column(const solver::EnergyForm& form, std::int64_t pole,
                         const solver::SolverOptions& opts) {
  const Grid& g = form.grid();
  if (pole < 0 || pole >= g.n_nodes ||
      !form.interior_D()[static_cast<std::size_t>(pole)])
    throw ConfigError("green_column: pole must lie in the interior of D");
  GreenColumn col;
  col.pole = pole;
  col.values = ScalarField(g, 0.0);
  solver::DirichletSolver ds(form, form.interior_D());
  col.stats = ds.solve(col.values.values, {{pole, 1.0}}, opts);
  return col;
}

double volume_kernel_integral(const metric::DistanceField& dist_from_x,
                              double a, double b) {
  if (!(b > a) || a < 0.0)
    throw ConfigError("volume_kernel_integral: need 0 <= a < b");
  const Grid& g = *dist_from_x.grid;
  const double hN = std::pow(g.h(), g.dim());
  std::vector<double> d;
  d.reserve(dist_from_x.values.size());
  for (double v : dist_from_x.values)
    if (std::isfinite(v) && v < b) d.push_back(v);
  std::sort(d.begin(), d.end());
  if (d.empty() || d.front() > a)
    throw NumericalError("volume_kernel_integral: empty ball at the lower limit");

  double total = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    double lo = std::max(a, d[j]);
    double hi = (j + 1 < d.size()) ? std::min(b, d[j + 1]) : b;
    if (hi <= lo) continue;
    double vol = double(j + 1) * hN;  // |B_s| for s in (d_j, d_{j+1}]
    total += 0.5 * (hi * hi - lo * lo) / vol;
  }
  return total;
}

double boundary_limit_estimate(const ScalarField& u,
                               const geometry::GridDomain& domain,
                               std::int64_t y_node) {
  const Grid& g = *u.grid;
  IVec yv = g.coords(y_node);
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int a = 0; a < g.dim(); ++a) {
    for (int sgn : {-1, 1}) {
      double v[3];
      bool ok = true;
      int steps[3] = {2, 4, 8};
      for (int s = 0; s < 3 && ok; ++s) {
        IVec p = yv;
        p[a] += sgn * steps[s];
        if (!g.in_bounds(p)) {
          ok = false;
          break;
        }
        std::int64_t idx = g.index(p);
        if (!domain.in_Omega(idx)) {
          ok = false;
          break;
        }
        v[s] = u.values[static_cast<std::size_t>(idx)];
      }
      if (!ok) continue;
      any = true;
      double d1 = v[0] - v[1];  // gap between 2h and 4h samples
      double d2 = v[1] - v[2];
      double est;
      if (d1 > 0.0 && d2 > 0.0) {
        double q = d2 / d1;  // = 2^p for v(t) = L - c t^p
        if (q > 1.15 && q < 4.0)
          est = v[0] + d1 / (q - 1.0);
        else
          est = v[0] + d1;  // fall back to first-order extrapolation
      } else {
        est = v[0];  // non-monotone approach: take the nearest sample
      }
      est = std::clamp(est, 0.0, 1.0);
      best = std::min(best, est);
    }
  }
  if (!any)
    throw GeometryError(
        "boundary_limit_estimate: no inward grid direction stays in Omega");
  return best;
}

double thin_fraction(const Grid& grid, const std::vector<std::int64_t>& K) {
  if (K.empty()) return 1.0;
  std::unordered_set<std::int64_t> inK(K.begin(), K.end());
  Stencil st(grid);
  std::int64_t thin = 0;
  for (std::int64_t i : K) {
    IVec iv = grid.coords(i);
    int nb = 0;
    for (std::size_t k = 0; k < st.offsets.size(); ++k) {
      IVec p = iv;
      for (int a = 0; a < grid.dim(); ++a) p[a] += st.offsets[k][a];
      if (grid.in_bounds(p) && inK.count(grid.index(p))) ++nb;
    }
    if (nb <= 2) ++thin;
  }
  return double(thin) / double(K.size());
}

PotentialProfile potential_profile(const solver::EnergyForm& form,
                                   const geometry::GridDomain& domain,
                                   std::int64_t y_node,
                                   const metric::DistanceField& dist_y,
                                   const std::vector<double>& radii,
                                   const solver::SolverOptions& opts) {
  const Grid& g = form.grid();
  const double h = g.h();
  const double hN = std::pow(h, g.dim());
  if (radii.empty()) throw ConfigError("potential_profile: empty radii list");
  for (std::size_t k = 0; k + 1 < radii.size(); ++k)
    if (radii[k + 1] >= radii[k])
      throw ConfigError("potential_profile: radii must decrease");
  if (radii.back() < 4.0 * h * (1.0 - 1e-12))
    throw ConfigError("potential_profile: smallest radius must be >= 4h");

  PotentialProfile prof;
  prof.y_node = y_node;
  const ScalarField* warm = nullptr;
  for (double rho : radii) {
    ProfileEntry e;
    e.rho = rho;
    auto K = geometry::compact_obstacle(domain, y_node, rho, dist_y.values);
    auto open_ball = metric::ball(dist_y, rho);
    e.K_cells = static_cast<std::int64_t>(K.size());
    e.ball_cells = static_cast<std::int64_t>(open_ball.size());
    e.ball_volume = double(open_ball.size()) * hN;
    for (std::int64_t i : open_ball)
      if (g.on_face(g.coords(i))) e.truncated = true;
    e.thin = thin_fraction(g, K);
    e.cap = capacity(form, K, opts, warm);
    e.limit_est = boundary_limit_estimate(e.cap.u0, domain, y_node);
    prof.entries.push_back(std::move(e));
    warm = &prof.entries.back().cap.u0;
  }
  return prof;
}

ScalarField assemble_barrier(const PotentialProfile& profile) {
  if (profile.entries.size() < 3)
    throw ConfigError("assemble_barrier: need at least 3 potentials");
  const Grid& g = *profile.entries.front().cap.u0.grid;
  ScalarField V(g, 0.0);
  double weight = 0.25;  // k starts at 2
  for (const auto& e : profile.entries) {
    for (std::int64_t i = 0; i < g.n_nodes; ++i)
      V.values[static_cast<std::size_t>(i)] +=
          weight * (1.0 - e.cap.u0.values[static_cast<std::size_t>(i)]);
    weight *= 0.5;
  }
  return V;
}

PairingResult capmeasure_pairing(const CapacityResult& cap_r,
                                 const CapacityResult& cap_rho,
                                 const CapacityResult* cap_quarter,
                                 double u_rho_limit) {
  std::unordered_set<std::int64_t> kr(cap_r.K.begin(), cap_r.K.end());
  std::unordered_set<std::int64_t> krho(cap_rho.K.begin(), cap_rho.K.end());
  for (std::int64_t i : cap_r.K)
    if (!krho.count(i))
      throw ConfigError("capmeasure_pairing: K_r is not contained in K_rho");

  PairingResult res;
  for (std::size_t j = 0; j < cap_rho.K.size(); ++j)
    if (kr.count(cap_rho.K[j])) res.mu_rho_on_Kr += cap_rho.measure[j];
  res.lemma_i_ok = res.mu_rho_on_Kr <= cap_r.capacity + 1e-7;
  if (cap_quarter) {
    res.has_quarter = true;
    res.lemma_ii_residual = cap_quarter->capacity - res.mu_rho_on_Kr;
    if (std::isfinite(u_rho_limit) && u_rho_limit > 0.0 &&
        cap_quarter->capacity > 0.0)
      res.fitted_C = std::max(0.0, res.lemma_ii_residual) /
                     (cap_quarter->capacity * u_rho_limit);
  }
  return res;
}

}  // namespace xe::potential
