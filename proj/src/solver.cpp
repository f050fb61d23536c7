#include "xe/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "xe/metric.hpp"

namespace xe::solver {

namespace {

int pow3(int n) { return n == 1 ? 3 : (n == 2 ? 9 : 27); }
int pow2(int n) { return 1 << n; }

// Vertex sign patterns of the reference cell, ordered by the {0,1}^N corner
// enumeration (axis 0 slowest).
void corner_pattern(int f, int dim, IVec& bits, Vec& sign) {
  bits = {0, 0, 0};
  sign = {0.0, 0.0, 0.0};
  for (int a = dim - 1; a >= 0; --a) {
    bits[a] = f & 1;
    f >>= 1;
  }
  for (int a = 0; a < dim; ++a) sign[a] = bits[a] ? 1.0 : -1.0;
}

int slot_of(const IVec& delta, int dim) {
  int s = 0;
  for (int a = 0; a < dim; ++a) s = s * 3 + (delta[a] + 1);
  return s;
}

}  // namespace

EnergyForm::EnergyForm(const Grid& grid, Mask mask_D,
                       fields::CoefficientMatrix B)
    : grid_(&grid), mask_D_(std::move(mask_D)), B_(std::move(B)) {
  if (mask_D_.size() != static_cast<std::size_t>(grid.n_nodes))
    throw ConfigError("energy form: D mask size mismatch");
  const int dim = grid.dim();
  stencil_size_ = pow3(dim);
  coef_ = std::pow(grid.h(), dim - 2) / std::pow(4.0, dim - 1);

  off_.resize(stencil_size_);
  off_flat_.resize(stencil_size_);
  for (int s = 0; s < stencil_size_; ++s) {
    int t = s;
    IVec d{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
      d[a] = t % 3 - 1;
      t /= 3;
    }
    off_[s] = d;
    std::int64_t f = 0;
    for (int a = 0; a < dim; ++a) f += grid.strides[a] * d[a];
    off_flat_[s] = f;
  }

  interior_D_ = geometry::interior_mask(grid, mask_D_);

  const_B_ = B_.constant();
  if (const_B_) B0_ = B_.evaluate(grid.position(std::int64_t{0}));

  // Cell assembled iff all 2^N vertices carry the D mask.
  cell_ok_.assign(static_cast<std::size_t>(grid.n_nodes), 0);
  const int nv = pow2(dim);
  std::vector<IVec> corners(nv);
  Vec dummy;
  for (int f = 0; f < nv; ++f) corner_pattern(f, dim, corners[f], dummy);
  for (std::int64_t i = 0; i < grid.n_nodes; ++i) {
    IVec lv = grid.coords(i);
    bool in_range = true;
    for (int a = 0; a < dim; ++a)
      if (lv[a] > grid.dims[a] - 2) in_range = false;
    if (!in_range) continue;
    bool ok = true;
    for (int f = 0; f < nv && ok; ++f) {
      IVec v = lv;
      for (int a = 0; a < dim; ++a) v[a] += corners[f][a];
      if (!mask_D_[static_cast<std::size_t>(grid.index(v))]) ok = false;
    }
    cell_ok_[static_cast<std::size_t>(i)] = ok ? 1 : 0;
  }
}

bool EnergyForm::cell_assembled(const IVec& low_corner) const {
  if (!grid_->in_bounds(low_corner)) return false;
  return cell_ok_[static_cast<std::size_t>(grid_->index(low_corner))] != 0;
}

SymMat EnergyForm::cell_matrix(const IVec& low_corner) const {
  if (const_B_) return B0_;
  Vec c = grid_->position(low_corner);
  for (int a = 0; a < grid_->dim(); ++a) c[a] += 0.5 * grid_->h();
  SymMat m = B_.evaluate(c);
  // Assembly requires symmetric coefficients.
  for (int r = 0; r < grid_->dim(); ++r)
    for (int cidx = r + 1; cidx < grid_->dim(); ++cidx) {
      double a1 = m[r * kMaxDim + cidx], a2 = m[cidx * kMaxDim + r];
      if (std::abs(a1 - a2) > 1e-12 * (std::abs(a1) + std::abs(a2) + 1.0))
        throw NumericalError("energy form: coefficient matrix is not symmetric");
    }
  return m;
}

void EnergyForm::row(std::int64_t node, double* w) const {
  const int dim = grid_->dim();
  const int nv = pow2(dim);
  std::fill(w, w + stencil_size_, 0.0);
  IVec iv = grid_->coords(node);
  IVec ebits, fbits;
  Vec s, t;
  for (int e = 0; e < nv; ++e) {
    corner_pattern(e, dim, ebits, s);
    IVec lv = iv;
    for (int a = 0; a < dim; ++a) lv[a] -= ebits[a];
    bool in_range = true;
    for (int a = 0; a < dim; ++a)
      if (lv[a] < 0 || lv[a] > grid_->dims[a] - 2) in_range = false;
    if (!in_range || !cell_ok_[static_cast<std::size_t>(grid_->index(lv))])
      continue;
    SymMat Bc = cell_matrix(lv);
    Vec Bs = matvec(Bc, s);
    for (int f = 0; f < nv; ++f) {
      corner_pattern(f, dim, fbits, t);
      IVec delta;
      for (int a = 0; a < dim; ++a) delta[a] = fbits[a] - ebits[a];
      w[slot_of(delta, dim)] += coef_ * dot(Bs, t);
    }
  }
}

double EnergyForm::apply_at(const std::vector<double>& u,
                            std::int64_t node) const {
  double w[27];
  row(node, w);
  double s = 0.0;
  for (int k = 0; k < stencil_size_; ++k) {
    // A nonzero coupling implies a shared assembled cell, so the neighbor
    // index is in bounds exactly when the weight is nonzero.
    if (w[k] == 0.0) continue;
    s += w[k] * u[static_cast<std::size_t>(node + off_flat_[k])];
  }
  return s;
}

double EnergyForm::energy_pair(const std::vector<double>& u,
                               const std::vector<double>& v) const {
  const Grid& g = *grid_;
  const int dim = g.dim();
  const int nv = pow2(dim);
  const double gscale = 1.0 / (g.h() * std::pow(2.0, dim - 1));
  const double hN = std::pow(g.h(), dim);

  std::vector<std::int64_t> vflat(nv);
  std::vector<Vec> signs(nv);
  IVec bits;
  for (int f = 0; f < nv; ++f) {
    corner_pattern(f, dim, bits, signs[f]);
    std::int64_t fo = 0;
    for (int a = 0; a < dim; ++a) fo += g.strides[a] * bits[a];
    vflat[f] = fo;
  }

  double total = 0.0;
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    if (!cell_ok_[static_cast<std::size_t>(i)]) continue;
    Vec gu{0, 0, 0}, gv{0, 0, 0};
    for (int f = 0; f < nv; ++f) {
      double uf = u[static_cast<std::size_t>(i + vflat[f])];
      double vf = v[static_cast<std::size_t>(i + vflat[f])];
      for (int a = 0; a < dim; ++a) {
        gu[a] += signs[f][a] * uf;
        gv[a] += signs[f][a] * vf;
      }
    }
    for (int a = 0; a < dim; ++a) {
      gu[a] *= gscale;
      gv[a] *= gscale;
    }
    SymMat Bc = const_B_ ? B0_ : cell_matrix(g.coords(i));
    total += hN * dot(matvec(Bc, gu), gv);
  }
  return total;
}

bool EnergyForm::monotone_assembly() const {
  if (monotone_cached_) return monotone_value_;
  auto check_row = [&](const double* w) {
    double scale = 0.0;
    for (int k = 0; k < stencil_size_; ++k) scale = std::max(scale, std::abs(w[k]));
    for (int k = 0; k < stencil_size_; ++k) {
      if (k == center_slot()) continue;
      if (w[k] > 1e-12 * scale) return false;
    }
    return true;
  };
  bool mono = true;
  if (const_B_) {
    // Synthesize the full-fan row directly from the constant cell matrix.
    const int dim = grid_->dim();
    const int nv = pow2(dim);
    std::vector<double> w(stencil_size_, 0.0);
    IVec ebits, fbits;
    Vec s, t;
    for (int e = 0; e < nv; ++e) {
      corner_pattern(e, dim, ebits, s);
      Vec Bs = matvec(B0_, s);
      for (int f = 0; f < nv; ++f) {
        corner_pattern(f, dim, fbits, t);
        IVec delta;
        for (int a = 0; a < dim; ++a) delta[a] = fbits[a] - ebits[a];
        w[slot_of(delta, dim)] += coef_ * dot(Bs, t);
      }
    }
    mono = check_row(w.data());
  } else {
    std::vector<double> w(stencil_size_);
    for (std::int64_t i = 0; i < grid_->n_nodes && mono; ++i) {
      if (!interior_D_[static_cast<std::size_t>(i)]) continue;
      row(i, w.data());
      mono = check_row(w.data());
    }
  }
  monotone_cached_ = true;
  monotone_value_ = mono;
  return mono;
}

DirichletSolver::DirichletSolver(const EnergyForm& form, const Mask& free_mask)
    : form_(&form) {
  const Grid& g = form.grid();
  if (free_mask.size() != static_cast<std::size_t>(g.n_nodes))
    throw ConfigError("solver: free mask size mismatch");
  free_slot_.assign(static_cast<std::size_t>(g.n_nodes), -1);
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    if (!free_mask[static_cast<std::size_t>(i)]) continue;
    if (!form.interior_D()[static_cast<std::size_t>(i)])
      throw ConfigError("solver: free nodes must lie in the interior of D");
    free_slot_[static_cast<std::size_t>(i)] =
        static_cast<std::int32_t>(free_.size());
    free_.push_back(i);
  }

  const int S = form.stencil_size();
  const_rows_ = form.constant_coefficients();
  if (const_rows_) {
    // All free nodes share the translation-invariant interior row.
    const int dim = g.dim();
    const int nv = pow2(dim);
    std::fill(w0_.begin(), w0_.end(), 0.0);
    IVec ebits, fbits;
    Vec s, t;
    for (int e = 0; e < nv; ++e) {
      corner_pattern(e, dim, ebits, s);
      Vec Bs = matvec(form.constant_matrix(), s);
      for (int f = 0; f < nv; ++f) {
        corner_pattern(f, dim, fbits, t);
        IVec delta;
        for (int a = 0; a < dim; ++a) delta[a] = fbits[a] - ebits[a];
        w0_[slot_of(delta, dim)] += form.cell_coef() * dot(Bs, t);
      }
    }
    diag_.assign(free_.size(), w0_[form.center_slot()]);
  } else {
    rows_.resize(free_.size() * static_cast<std::size_t>(S));
    diag_.resize(free_.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t f = 0; f < static_cast<std::int64_t>(free_.size()); ++f) {
      form.row(free_[static_cast<std::size_t>(f)],
               &rows_[static_cast<std::size_t>(f) * S]);
      diag_[static_cast<std::size_t>(f)] =
          rows_[static_cast<std::size_t>(f) * S + form.center_slot()];
    }
  }
  for (auto& d : diag_)
    if (!(d > 0.0)) d = 1.0;  // fully degenerate row; leave unpreconditioned
}

void DirichletSolver::apply(const std::vector<double>& u,
                            std::vector<double>& y) const {
  const int S = form_->stencil_size();
  const auto& off = form_->stencil_flat();
  const std::int64_t n = static_cast<std::int64_t>(free_.size());
  if (const_rows_) {
    const double* w = w0_.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t f = 0; f < n; ++f) {
      const std::int64_t i = free_[static_cast<std::size_t>(f)];
      double s = 0.0;
      for (int k = 0; k < S; ++k)
        s += w[k] * u[static_cast<std::size_t>(i + off[k])];
      y[static_cast<std::size_t>(f)] = s;
    }
  } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t f = 0; f < n; ++f) {
      const std::int64_t i = free_[static_cast<std::size_t>(f)];
      const double* w = &rows_[static_cast<std::size_t>(f) * S];
      double s = 0.0;
      for (int k = 0; k < S; ++k)
        s += w[k] * u[static_cast<std::size_t>(i + off[k])];
      y[static_cast<std::size_t>(f)] = s;
    }
  }
}

double DirichletSolver::residual(const std::vector<double>& u,
                                 const std::vector<double>& b_free,
                                 std::vector<double>& r) const {
  apply(u, r);
  double nrm = 0.0;
  for (std::size_t f = 0; f < free_.size(); ++f) {
    r[f] = b_free[f] - r[f];
    nrm += r[f] * r[f];
  }
  return std::sqrt(nrm);
}

std::vector<std::int64_t> DirichletSolver::floating_components() const {
  // Free nodes reachable from some constrained node through nonzero
  // couplings; the complement is floating.
  const int S = form_->stencil_size();
  const auto& off = form_->stencil_flat();
  std::vector<std::uint8_t> reached(free_.size(), 0);
  std::vector<std::int64_t> stack;
  std::vector<double> w(S);
  for (std::size_t f = 0; f < free_.size(); ++f) {
    const std::int64_t i = free_[f];
    const double* wr = const_rows_ ? w0_.data() : &rows_[f * S];
    for (int k = 0; k < S; ++k) {
      if (k == form_->center_slot() || wr[k] == 0.0) continue;
      if (free_slot_[static_cast<std::size_t>(i + off[k])] < 0) {
        reached[f] = 1;
        stack.push_back(static_cast<std::int64_t>(f));
        break;
      }
    }
  }
  while (!stack.empty()) {
    std::int64_t f = stack.back();
    stack.pop_back();
    const std::int64_t i = free_[static_cast<std::size_t>(f)];
    const double* wr =
        const_rows_ ? w0_.data() : &rows_[static_cast<std::size_t>(f) * S];
    for (int k = 0; k < S; ++k) {
      if (wr[k] == 0.0) continue;
      std::int32_t g = free_slot_[static_cast<std::size_t>(i + off[k])];
      if (g >= 0 && !reached[static_cast<std::size_t>(g)]) {
        reached[static_cast<std::size_t>(g)] = 1;
        stack.push_back(g);
      }
    }
  }
  std::vector<std::int64_t> floating;
  for (std::size_t f = 0; f < free_.size(); ++f)
    if (!reached[f]) floating.push_back(free_[f]);
  return floating;
}

SolveStats DirichletSolver::solve(
    std::vector<double>& u,
    const std::vector<std::pair<std::int64_t, double>>& rhs,
    const SolverOptions& opts) const {
  SolveStats stats;
  const std::size_t n = free_.size();
  if (n == 0) {
    stats.converged = true;
    return stats;
  }
#ifdef _OPENMP
  if (opts.threads > 0) omp_set_num_threads(opts.threads);
#endif

  std::vector<double> b(n, 0.0);
  for (const auto& [node, val] : rhs) {
    std::int32_t f = free_slot_[static_cast<std::size_t>(node)];
    if (f < 0) throw ConfigError("solver: rhs entry on a constrained node");
    b[static_cast<std::size_t>(f)] += val;
  }

  // Reference scale: load produced by the constraints alone.
  std::vector<double> r(n), z(n), p(n), Ap(n);
  double scale;
  {
    std::vector<double> ucold(u);
    for (std::int64_t i : free_) ucold[static_cast<std::size_t>(i)] = 0.0;
    scale = residual(ucold, b, r);
  }
  if (scale == 0.0) {
    for (std::int64_t i : free_) u[static_cast<std::size_t>(i)] = 0.0;
    stats.converged = true;
    return stats;
  }
  const double target = opts.rtol * scale;

  double rn = residual(u, b, r);
  int maxit = opts.maxit > 0
                  ? opts.maxit
                  : static_cast<int>(opts.maxit_factor * std::sqrt(double(n))) + 20;

  std::vector<double> pfull(u.size(), 0.0);
  double rz = 0.0;
  for (std::size_t f = 0; f < n; ++f) {
    z[f] = r[f] / diag_[f];
    rz += r[f] * z[f];
    p[f] = z[f];
    pfull[static_cast<std::size_t>(free_[f])] = p[f];
  }

  int it = 0;
  while (rn > target && it < maxit) {
    ++it;
    apply(pfull, Ap);
    double pAp = 0.0;
    for (std::size_t f = 0; f < n; ++f) pAp += p[f] * Ap[f];
    if (!(pAp > 0.0)) break;  // semidefinite block; diagnosed below
    double alpha = rz / pAp;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t f = 0; f < static_cast<std::int64_t>(n); ++f) {
      u[static_cast<std::size_t>(free_[static_cast<std::size_t>(f)])] +=
          alpha * p[static_cast<std::size_t>(f)];
      r[static_cast<std::size_t>(f)] -= alpha * Ap[static_cast<std::size_t>(f)];
    }
    double rn2 = 0.0;
    for (std::size_t f = 0; f < n; ++f) rn2 += r[f] * r[f];
    rn = std::sqrt(rn2);
    if (rn <= target) {
      // Guard against accumulated drift before declaring victory.
      rn = residual(u, b, r);
      if (rn <= target) break;
    }
    double rz2 = 0.0;
    for (std::size_t f = 0; f < n; ++f) {
      z[f] = r[f] / diag_[f];
      rz2 += r[f] * z[f];
    }
    double beta = rz2 / rz;
    rz = rz2;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t f = 0; f < static_cast<std::int64_t>(n); ++f) {
      p[static_cast<std::size_t>(f)] =
          z[static_cast<std::size_t>(f)] + beta * p[static_cast<std::size_t>(f)];
      pfull[static_cast<std::size_t>(free_[static_cast<std::size_t>(f)])] =
          p[static_cast<std::size_t>(f)];
    }
  }

  stats.iterations = it;
  stats.rel_residual = rn / scale;
  stats.converged = rn <= target;
  if (!stats.converged) {
    auto floating = floating_components();
    stats.floating_nodes = static_cast<std::int64_t>(floating.size());
    if (opts.throw_on_fail) {
      if (!floating.empty())
        throw NumericalError(
            "solver: stagnation; " + std::to_string(floating.size()) +
            " free nodes are decoupled from every constraint");
      throw NumericalError("solver: conjugate gradients stagnated at relative residual " +
                           std::to_string(stats.rel_residual));
    }
  }
  return stats;
}

ScalarField solve_dirichlet(const DirichletProblem& p, const SolverOptions& opts,
                            SolveStats* stats) {
  if (!p.form) throw ConfigError("solve_dirichlet: missing energy form");
  const Grid& g = p.form->grid();
  if (p.boundary.values.size() != static_cast<std::size_t>(g.n_nodes))
    throw ConfigError("solve_dirichlet: boundary data size mismatch");
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    if (p.interior[static_cast<std::size_t>(i)]) continue;
    if (!std::isfinite(p.boundary.values[static_cast<std::size_t>(i)]))
      throw ConfigError("solve_dirichlet: boundary data must be finite");
  }
  ScalarField u = p.boundary;
  u.grid = &g;
  DirichletSolver solver(*p.form, p.interior);
  SolveStats s = solver.solve(u.values, {}, opts);
  if (stats) *stats = s;
  return u;
}

double caccioppoli_ratio(const EnergyForm& form,
                         const fields::FieldFamily& family,
                         const geometry::GridDomain& domain,
                         const ScalarField& u,
                         const std::vector<std::int64_t>& K) {
  const Grid& g = form.grid();
  const double h = g.h();
  const double hN = std::pow(h, g.dim());

  // u must be a discrete solution in Omega.
  double max_interior = 0.0, max_scale = 0.0;
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    if (domain.in_Omega(i))
      max_interior = std::max(max_interior, std::abs(form.apply_at(u.values, i)));
  }
  for (std::int64_t i : domain.boundary_nodes)
    max_scale = std::max(max_scale, std::abs(form.apply_at(u.values, i)));
  max_scale = std::max(max_scale, max_interior);
  if (max_scale > 0.0 && max_interior > 1e-6 * max_scale)
    throw NumericalError("caccioppoli_ratio: u is not a discrete solution in Omega");

  auto dist = metric::control_distance_from(family, domain.boundary_nodes, g);
  double d = std::numeric_limits<double>::infinity();
  for (std::int64_t i : K) d = std::min(d, dist.at(i));
  if (!(d >= 4.0 * h * (1.0 - 1e-12)))
    throw ConfigError("caccioppoli_ratio: K must keep d-distance >= 4h from the boundary");

  double xnorm2 = 0.0;
  for (std::int64_t i : K) {
    double xg = metric::x_gradient_norm(family, u, i);
    xnorm2 += xg * xg * hN;
  }
  double unorm2 = 0.0;
  for (std::int64_t i = 0; i < g.n_nodes; ++i)
    if (domain.in_Omega(i))
      unorm2 += u.values[static_cast<std::size_t>(i)] *
                u.values[static_cast<std::size_t>(i)] * hN;
  if (unorm2 == 0.0) return 0.0;
  return d * std::sqrt(xnorm2) / std::sqrt(unorm2);
}

}  // namespace xe::solver
