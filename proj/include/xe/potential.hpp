#pragma once

#include <cstdint>
#include <vector>

#include "xe/geometry.hpp"
#include "xe/grid.hpp"
#include "xe/metric.hpp"
#include "xe/solver.hpp"

namespace xe::potential {

// Variational capacity of a compact node set K in D: the capacitary
// potential minimizes u^T S u subject to u = 1 on K and u = 0 outside the
// interior of D; the capacitary measure is the stiffness residual on K.
// By the energy identity, total_measure equals the capacity up to solver
// tolerance. Negative measure entries (possible for mixed-term B, where the
// assembly is not monotone) are counted, never clipped.
struct CapacityResult {
  std::vector<std::int64_t> K;
  ScalarField u0;
  double capacity = 0.0;
  std::vector<double> measure;  // aligned with K
  double total_measure = 0.0;
  std::int64_t negative_measure_entries = 0;
  double u_min = 0.0, u_max = 0.0;
  solver::SolveStats stats;
};

CapacityResult capacity(const solver::EnergyForm& form,
                        const std::vector<std::int64_t>& K,
                        const solver::SolverOptions& opts = {},
                        const ScalarField* warm_start = nullptr);

// Column of the discrete Green function: S g = e_pole with zero Dirichlet
// data outside the interior of D (unit discrete mass at the pole).
struct GreenColumn {
  std::int64_t pole = -1;
  ScalarField values;
  solver::SolveStats stats;
};

GreenColumn green_column(const solver::EnergyForm& form, std::int64_t pole,
                         const solver::SolverOptions& opts = {});

// Integral of s / |B_s(x)| over [a, b], with |B_s(x)| read off the empirical
// step profile of the distance field from x (node count times h^N). Exact
// for the step profile.
double volume_kernel_integral(const metric::DistanceField& dist_from_x,
                              double a, double b);

// Extrapolated boundary limit of u along inward grid directions: samples at
// distances {2h, 4h, 8h} from y along each of the up-to-2N axis directions
// whose samples all lie in Omega, three-point Richardson extrapolation with
// a fitted rate, minimum over directions, clamped to [0, 1].
double boundary_limit_estimate(const ScalarField& u,
                               const geometry::GridDomain& domain,
                               std::int64_t y_node);

// Fraction of K nodes with at most two stencil neighbors inside K; close to
// one for line-like rasterizations whose true width fell under the lattice
// spacing (the sub-resolution failure mode of discrete capacities).
double thin_fraction(const Grid& grid, const std::vector<std::int64_t>& K);

struct ProfileEntry {
  double rho = 0.0;
  CapacityResult cap;
  double limit_est = 0.0;
  double ball_volume = 0.0;     // open-ball node count * h^N
  std::int64_t ball_cells = 0;
  std::int64_t K_cells = 0;
  double thin = 0.0;
  bool truncated = false;
};

struct PotentialProfile {
  std::int64_t y_node = -1;
  std::vector<ProfileEntry> entries;  // radii in the given (decreasing) order
};

// Capacitary potentials of K_rho over a decreasing radii list (dyadic
// schedule; rho_min >= 4h), with the boundary-limit estimate per level.
PotentialProfile potential_profile(const solver::EnergyForm& form,
                                   const geometry::GridDomain& domain,
                                   std::int64_t y_node,
                                   const metric::DistanceField& dist_y,
                                   const std::vector<double>& radii,
                                   const solver::SolverOptions& opts = {});

// Truncated barrier sum V = sum_{k=2}^{kmax} 2^{-k} (1 - u_k) over the
// profile's potentials in decreasing-radius order. Nonnegative up to solver
// slack; L-harmonic in Omega away from the obstacles by superposition.
ScalarField assemble_barrier(const PotentialProfile& profile);

struct PairingResult {
  double mu_rho_on_Kr = 0.0;
  bool lemma_i_ok = false;
  double lemma_ii_residual = 0.0;  // cap(K_{r/4}) - mu_rho(K_r), when provided
  double fitted_C = 0.0;           // residual / (cap(K_{r/4}) * u_rho(y))
  bool has_quarter = false;
};

// Pairing of nested capacitary data: mu_rho(K_r) against cap(K_r), plus the
// quarter-radius comparison when cap(K_{r/4}) and a potential-limit estimate
// are supplied.
PairingResult capmeasure_pairing(const CapacityResult& cap_r,
                                 const CapacityResult& cap_rho,
                                 const CapacityResult* cap_quarter = nullptr,
                                 double u_rho_limit =
                                     std::numeric_limits<double>::quiet_NaN());

}  // namespace xe::potential
