#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "xe/fields.hpp"
#include "xe/geometry.hpp"
#include "xe/grid.hpp"

namespace xe::solver {

// Discrete energy form over the host domain D: multilinear (tensor-product
// linear) nodal elements on the Cartesian lattice, one midpoint quadrature
// point per cell evaluating the full integrand <B grad u, grad v>. The local
// cell matrix is h^(N-2) / 4^(N-1) * s_a^T B(c) s_b over vertex sign
// patterns s, so u^T S u equals the midpoint-quadrature energy exactly and
// the assembly is symmetric PSD whenever B is PSD.
class EnergyForm {
 public:
  EnergyForm(const Grid& grid, Mask mask_D, fields::CoefficientMatrix B);

  const Grid& grid() const { return *grid_; }
  const Mask& mask_D() const { return mask_D_; }
  const Mask& interior_D() const { return interior_D_; }
  const fields::CoefficientMatrix& coefficients() const { return B_; }

  int stencil_size() const { return stencil_size_; }  // 3^N including center
  const std::vector<std::int64_t>& stencil_flat() const { return off_flat_; }
  const std::vector<IVec>& stencil_offsets() const { return off_; }
  int center_slot() const { return stencil_size_ / 2; }

  bool cell_assembled(const IVec& low_corner) const;

  // Stiffness row of a node: 3^N coupling weights in stencil order.
  void row(std::int64_t node, double* w) const;

  // (S u)_i for a single node.
  double apply_at(const std::vector<double>& u, std::int64_t node) const;

  // u^T S v via the cell loop (exact midpoint-quadrature energy).
  double energy(const std::vector<double>& u) const { return energy_pair(u, u); }
  double energy_pair(const std::vector<double>& u,
                     const std::vector<double>& v) const;

  // All couplings of interior-of-D rows are nonpositive off the diagonal
  // (an M-matrix assembly, which makes the discrete maximum principle
  // exact). Mixed or strongly anisotropic B typically breaks this.
  bool monotone_assembly() const;

  // Documented maximum-principle slack for boundary data of oscillation osc.
  double mp_tol(double osc) const {
    return monotone_assembly() ? 1e-8 * std::max(1.0, osc) : 5e-3 * osc;
  }

  bool constant_coefficients() const { return const_B_; }
  const SymMat& constant_matrix() const { return B0_; }
  double cell_coef() const { return coef_; }  // h^(N-2) / 4^(N-1)

 private:
  const Grid* grid_;
  Mask mask_D_;
  Mask interior_D_;
  fields::CoefficientMatrix B_;
  bool const_B_ = false;
  SymMat B0_{};
  double coef_ = 0.0;
  int stencil_size_ = 0;
  std::vector<IVec> off_;                  // 3^N offsets incl. center
  std::vector<std::int64_t> off_flat_;
  Mask cell_ok_;                           // per low-corner node: cell assembled
  mutable bool monotone_cached_ = false;
  mutable bool monotone_value_ = false;

  SymMat cell_matrix(const IVec& low_corner) const;
};

struct SolverOptions {
  double rtol = 1e-9;
  double maxit_factor = 50.0;  // maxit = factor * sqrt(#unknowns)
  int maxit = -1;              // explicit override when positive
  int threads = 0;             // 0: leave OpenMP defaults alone
  bool throw_on_fail = true;
};

struct SolveStats {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
  std::int64_t floating_nodes = 0;
};

// Conjugate-gradient workspace for one free-node set. Free nodes must lie in
// the interior of D (full element fan); Dirichlet values live in the full
// nodal vector and are read through the stencil.
class DirichletSolver {
 public:
  DirichletSolver(const EnergyForm& form, const Mask& free_mask);

  std::int64_t unknowns() const { return static_cast<std::int64_t>(free_.size()); }

  // Solves S u = rhs on the free set, holding all other entries of u fixed.
  // `u` carries the initial guess on free nodes (warm start welcome).
  SolveStats solve(std::vector<double>& u,
                   const std::vector<std::pair<std::int64_t, double>>& rhs,
                   const SolverOptions& opts) const;

  // Free nodes unreachable from any constrained node through nonzero
  // couplings; nonempty only for totally degenerate coefficient blocks.
  std::vector<std::int64_t> floating_components() const;

 private:
  const EnergyForm* form_;
  std::vector<std::int64_t> free_;
  std::vector<std::int32_t> free_slot_;  // node -> free index, -1 otherwise
  bool const_rows_ = false;
  std::array<double, 27> w0_{};
  std::vector<double> rows_;             // variable-B: nfree x 3^N
  std::vector<double> diag_;

  void apply(const std::vector<double>& u, std::vector<double>& y) const;
  double residual(const std::vector<double>& u,
                  const std::vector<double>& b_free,
                  std::vector<double>& r) const;
};

struct DirichletProblem {
  const EnergyForm* form = nullptr;
  Mask interior;       // unknown nodes
  ScalarField boundary;  // values used outside the interior mask
};

ScalarField solve_dirichlet(const DirichletProblem& p,
                            const SolverOptions& opts = {},
                            SolveStats* stats = nullptr);

// dist(K, dOmega) * ||Xu||_L2(K) / ||u||_L2(Omega) for a discrete solution u
// of the Dirichlet problem on Omega. Errors out if u's interior residual
// exceeds 1e-6 of the overall stiffness-image scale (not a solution), or if
// K is closer than 4h to the boundary in the control metric.
double caccioppoli_ratio(const EnergyForm& form,
                         const fields::FieldFamily& family,
                         const geometry::GridDomain& domain,
                         const ScalarField& u,
                         const std::vector<std::int64_t>& K);

}  // namespace xe::solver
