#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "xe/grid.hpp"

namespace xe::fields {

// Per-axis scalar profile for the diagonal family phi_i(x) d_i.
struct DiagonalProfile {
  enum class Kind { Constant, AxisPower, Bump } kind = Kind::Constant;
  double value = 1.0;     // Constant
  int axis = 0;           // AxisPower: value * |x[axis]|^exponent
  double exponent = 1.0;
  // Bump: floor + (1 - floor) * min(1, |x - center| / radius); Lipschitz,
  // equals floor at the center and 1 outside the bump radius.
  Vec center{};
  double radius = 1.0;
  double floor_value = 0.5;

  double eval(const Vec& x) const;
  double lipschitz(const BoundingBox& box) const;
};

// Family of locally Lipschitz vector fields X_1..X_m on R^N.
// Built-ins: euclidean (m = N, X_j = e_j), grushin(alpha) (X_1 = d_1,
// X_j = |x_1|^alpha d_j for j >= 2), heisenberg (N = 3, m = 2), and
// diagonal (X_i = phi_i(x) d_i with declared profiles).
class FieldFamily {
 public:
  static FieldFamily euclidean(int dim);
  static FieldFamily grushin(int dim, double alpha);
  static FieldFamily heisenberg();
  static FieldFamily diagonal(int dim, std::vector<DiagonalProfile> phis);

  int dim() const { return dim_; }
  int count() const { return m_; }
  const std::string& name() const { return name_; }

  Vec evaluate(int j, const Vec& x) const;

  // Structure matrix A(x) = sum_j X_j(x) X_j(x)^T, so <A xi, xi> equals
  // sum_j <X_j(x), xi>^2.
  SymMat structure_matrix(const Vec& x) const;

  // True when A(x) does not depend on x (lets downstream assembly use a
  // single translation-invariant stencil).
  bool constant_structure() const;

  // Declared Lipschitz constant of the components over the box.
  double lipschitz_bound(const BoundingBox& box) const;

 private:
  std::string name_;
  int dim_ = 0;
  int m_ = 0;
  double alpha_ = 1.0;
  std::vector<DiagonalProfile> phis_;
};

// Symmetric coefficient matrix B(x) with a declared X-ellipticity band
// [lambda, Lambda] relative to a field family.
class CoefficientMatrix {
 public:
  using EvalFn = std::function<SymMat(const Vec&)>;

  CoefficientMatrix() = default;
  CoefficientMatrix(std::string name, EvalFn eval, double lambda, double Lambda,
                    bool constant);

  // B(x) = A(x) (lambda = Lambda = 1).
  static CoefficientMatrix structure(const FieldFamily& fam);
  // B(x) = c A(x).
  static CoefficientMatrix scaled(const FieldFamily& fam, double c);
  // Literal diagonal matrix (X-elliptic for the euclidean family).
  static CoefficientMatrix diagonal(int dim, const std::vector<double>& d);
  // B(x) = c1 A(x) + c2 A(x) R A(x) with R a seeded random symmetric matrix
  // normalized so the declared band [lambda, Lambda] holds by construction.
  static CoefficientMatrix perturbed(const FieldFamily& fam,
                                     const BoundingBox& box, double lambda,
                                     double Lambda, std::uint64_t seed);

  SymMat evaluate(const Vec& x) const { return eval_(x); }
  double lambda() const { return lambda_; }
  double Lambda() const { return Lambda_; }
  bool constant() const { return constant_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_ = "structure";
  EvalFn eval_;
  double lambda_ = 1.0;
  double Lambda_ = 1.0;
  bool constant_ = false;
};

struct EllipticityReport {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  bool pass = false;
  std::int64_t samples = 0;
  std::int64_t skipped_degenerate = 0;  // sample points with <A xi, xi> = 0
};

// Sample <B xi, xi> / <A xi, xi> at random nodes and directions. Passes iff
// every ratio lies in [lambda (1 - 1e-9), Lambda (1 + 1e-9)]. A positive
// numerator over a degenerate direction is an X-ellipticity violation.
EllipticityReport check_x_ellipticity(const CoefficientMatrix& B,
                                      const FieldFamily& family,
                                      const Grid& grid, std::int64_t samples,
                                      std::uint64_t seed);

// Smallest/largest eigenvalue of a symmetric matrix restricted to the
// leading dim x dim block (cyclic Jacobi; exact enough for 3x3).
double sym_eig_min(const SymMat& m, int dim);
double sym_eig_max(const SymMat& m, int dim);

// Full eigendecomposition; evecs holds orthonormal eigenvectors by row.
void sym_eigen(const SymMat& m, int dim, std::array<double, kMaxDim>& evals,
               SymMat& evecs);

// Top speed of a sub-unit curve through x in direction dir (not required
// to be normalized): the largest t with t * dir/|dir| = sum_j a_j X_j(x),
// sum a_j^2 <= 1. Equals 1/sqrt(<A(x)^+ d, d>) on range(A) and 0 off it.
double subunit_speed(const FieldFamily& family, const Vec& x, const Vec& dir);
double subunit_speed(const SymMat& A, int dim, const Vec& dir);

}  // namespace xe::fields
