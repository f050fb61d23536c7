#include "xe/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace xe::fields {

double DiagonalProfile::eval(const Vec& x) const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::AxisPower:
      return value * std::pow(std::abs(x[axis]), exponent);
    case Kind::Bump: {
      double r = norm(sub(x, center)) / radius;
      return floor_value + (1.0 - floor_value) * std::min(1.0, r);
    }
  }
  return 1.0;
}

double DiagonalProfile::lipschitz(const BoundingBox& box) const {
  switch (kind) {
    case Kind::Constant:
      return 0.0;
    case Kind::AxisPower: {
      double r = std::max(std::abs(box.lo[axis]), std::abs(box.hi[axis]));
      if (exponent < 1.0) return std::numeric_limits<double>::infinity();
      return std::abs(value) * exponent * std::pow(r, exponent - 1.0);
    }
    case Kind::Bump:
      return (1.0 - floor_value) / radius;
  }
  return 0.0;
}

FieldFamily FieldFamily::euclidean(int dim) {
  FieldFamily f;
  f.name_ = "euclidean";
  f.dim_ = dim;
  f.m_ = dim;
  return f;
}

FieldFamily FieldFamily::grushin(int dim, double alpha) {
  if (dim < 2) throw ConfigError("grushin family needs dim >= 2");
  if (alpha < 1.0)
    throw ConfigError("grushin alpha must be >= 1 (local Lipschitz continuity)");
  FieldFamily f;
  f.name_ = "grushin";
  f.dim_ = dim;
  f.m_ = dim;
  f.alpha_ = alpha;
  return f;
}

FieldFamily FieldFamily::heisenberg() {
  FieldFamily f;
  f.name_ = "heisenberg";
  f.dim_ = 3;
  f.m_ = 2;
  return f;
}

FieldFamily FieldFamily::diagonal(int dim, std::vector<DiagonalProfile> phis) {
  if (static_cast<int>(phis.size()) != dim)
    throw ConfigError("diagonal family needs one profile per axis");
  FieldFamily f;
  f.name_ = "diagonal";
  f.dim_ = dim;
  f.m_ = dim;
  f.phis_ = std::move(phis);
  return f;
}

Vec FieldFamily::evaluate(int j, const Vec& x) const {
  Vec v{0.0, 0.0, 0.0};
  if (name_ == "euclidean") {
    v[j] = 1.0;
  } else if (name_ == "grushin") {
    if (j == 0)
      v[0] = 1.0;
    else
      v[j] = std::pow(std::abs(x[0]), alpha_);
  } else if (name_ == "heisenberg") {
    // X_1 = d_1 - (x_2/2) d_3, X_2 = d_2 + (x_1/2) d_3
    if (j == 0) {
      v[0] = 1.0;
      v[2] = -0.5 * x[1];
    } else {
      v[1] = 1.0;
      v[2] = 0.5 * x[0];
    }
  } else {  // diagonal
    v[j] = phis_[j].eval(x);
  }
  return v;
}

SymMat FieldFamily::structure_matrix(const Vec& x) const {
  SymMat A{};
  for (int j = 0; j < m_; ++j) {
    Vec Xj = evaluate(j, x);
    for (int r = 0; r < dim_; ++r)
      for (int c = 0; c < dim_; ++c) A[r * kMaxDim + c] += Xj[r] * Xj[c];
  }
  return A;
}

bool FieldFamily::constant_structure() const {
  if (name_ == "euclidean") return true;
  if (name_ == "diagonal") {
    for (const auto& p : phis_)
      if (p.kind != DiagonalProfile::Kind::Constant) return false;
    return true;
  }
  return false;
}

double FieldFamily::lipschitz_bound(const BoundingBox& box) const {
  if (name_ == "euclidean") return 0.0;
  if (name_ == "grushin") {
    double r = std::max(std::abs(box.lo[0]), std::abs(box.hi[0]));
    return alpha_ * std::pow(std::max(r, 1e-300), alpha_ - 1.0);
  }
  if (name_ == "heisenberg") return 0.5;
  double L = 0.0;
  for (const auto& p : phis_) L = std::max(L, p.lipschitz(box));
  return L;
}

CoefficientMatrix::CoefficientMatrix(std::string name, EvalFn eval,
                                     double lambda, double Lambda,
                                     bool constant)
    : name_(std::move(name)),
      eval_(std::move(eval)),
      lambda_(lambda),
      Lambda_(Lambda),
      constant_(constant) {
  if (lambda_ <= 0.0 || Lambda_ < lambda_)
    throw ConfigError("coefficient matrix: need 0 < lambda <= Lambda");
}

CoefficientMatrix CoefficientMatrix::structure(const FieldFamily& fam) {
  return CoefficientMatrix(
      "structure", [fam](const Vec& x) { return fam.structure_matrix(x); }, 1.0,
      1.0, fam.constant_structure());
}

CoefficientMatrix CoefficientMatrix::scaled(const FieldFamily& fam, double c) {
  if (c <= 0.0) throw ConfigError("coefficient matrix: scale must be positive");
  return CoefficientMatrix(
      "scaled",
      [fam, c](const Vec& x) {
        SymMat A = fam.structure_matrix(x);
        for (auto& v : A) v *= c;
        return A;
      },
      c, c, fam.constant_structure());
}

CoefficientMatrix CoefficientMatrix::diagonal(int dim,
                                              const std::vector<double>& d) {
  if (static_cast<int>(d.size()) != dim)
    throw ConfigError("coefficient matrix: diagonal needs one entry per axis");
  double lo = *std::min_element(d.begin(), d.end());
  double hi = *std::max_element(d.begin(), d.end());
  if (lo <= 0.0) throw ConfigError("coefficient matrix: diagonal entries must be positive");
  SymMat m{};
  for (int a = 0; a < dim; ++a) m[a * kMaxDim + a] = d[a];
  return CoefficientMatrix(
      "diagonal", [m](const Vec&) { return m; }, lo, hi, true);
}

CoefficientMatrix CoefficientMatrix::perturbed(const FieldFamily& fam,
                                               const BoundingBox& box,
                                               double lambda, double Lambda,
                                               std::uint64_t seed) {
  if (lambda <= 0.0 || Lambda <= lambda)
    throw ConfigError("coefficient matrix: perturbed needs 0 < lambda < Lambda");
  const int dim = fam.dim();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SymMat R{};
  for (int r = 0; r < dim; ++r)
    for (int c = r; c < dim; ++c) {
      double v = u(rng);
      R[r * kMaxDim + c] = v;
      R[c * kMaxDim + r] = v;
    }
  double nr = std::max(std::abs(sym_eig_min(R, dim)), std::abs(sym_eig_max(R, dim)));
  if (nr == 0.0) nr = 1.0;
  for (auto& v : R) v /= nr;

  // Largest spectral norm of A over the grid-scale sampling of the box.
  double a_max = 0.0;
  const int ns = 33;
  Vec p{};
  for (int i = 0; i <= ns; ++i)
    for (int j = 0; j <= ns; ++j)
      for (int k = 0; k <= (dim == 3 ? ns : 0); ++k) {
        p = {box.lo[0] + (box.hi[0] - box.lo[0]) * i / ns,
             box.lo[1] + (box.hi[1] - box.lo[1]) * j / ns,
             dim == 3 ? box.lo[2] + (box.hi[2] - box.lo[2]) * k / ns : 0.0};
        a_max = std::max(a_max, sym_eig_max(fam.structure_matrix(p), dim));
      }
  if (a_max <= 0.0) throw ConfigError("coefficient matrix: degenerate family on the whole box");

  const double c1 = 0.5 * (lambda + Lambda);
  const double c2 = 0.5 * (Lambda - lambda) / a_max;
  auto eval = [fam, R, c1, c2, dim](const Vec& x) {
    SymMat A = fam.structure_matrix(x);
    SymMat ARA{};
    // ARA = A * R * A
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) {
        double s = 0.0;
        for (int a = 0; a < dim; ++a)
          for (int b = 0; b < dim; ++b)
            s += A[r * kMaxDim + a] * R[a * kMaxDim + b] * A[b * kMaxDim + c];
        ARA[r * kMaxDim + c] = s;
      }
    SymMat B{};
    for (int t = 0; t < kMaxDim * kMaxDim; ++t) B[t] = c1 * A[t] + c2 * ARA[t];
    return B;
  };
  return CoefficientMatrix("perturbed", eval, lambda, Lambda,
                           fam.constant_structure());
}

EllipticityReport check_x_ellipticity(const CoefficientMatrix& B,
                                      const FieldFamily& family,
                                      const Grid& grid, std::int64_t samples,
                                      std::uint64_t seed) {
  if (samples < 1) throw ConfigError("check_x_ellipticity: samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> pick(0, grid.n_nodes - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int dim = grid.dim();

  EllipticityReport rep;
  rep.samples = samples;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  rep.max_ratio = -std::numeric_limits<double>::infinity();

  auto probe = [&](const SymMat& A, const SymMat& Bx, const Vec& xi) {
    double qa = quad_form(A, xi);
    double qb = quad_form(Bx, xi);
    double scale = sym_eig_max(A, dim);
    if (qa <= 1e-14 * std::max(scale, 1.0)) {
      ++rep.skipped_degenerate;
      if (qb > 1e-12 * std::max(std::abs(sym_eig_max(Bx, dim)), 1.0))
        throw NumericalError(
            "check_x_ellipticity: positive <B xi, xi> over a degenerate direction");
      return;
    }
    double ratio = qb / qa;
    rep.min_ratio = std::min(rep.min_ratio, ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
  };

  for (std::int64_t s = 0; s < samples; ++s) {
    Vec x = grid.position(pick(rng));
    SymMat A = family.structure_matrix(x);
    SymMat Bx = B.evaluate(x);

    Vec xi{0.0, 0.0, 0.0};
    double nx = 0.0;
    while (nx == 0.0) {
      for (int a = 0; a < dim; ++a) xi[a] = gauss(rng);
      nx = norm(xi);
    }
    for (int a = 0; a < dim; ++a) xi[a] /= nx;
    probe(A, Bx, xi);
    // Axis directions catch degeneracy loci that random draws miss.
    for (int a = 0; a < dim; ++a) {
      Vec e{0.0, 0.0, 0.0};
      e[a] = 1.0;
      probe(A, Bx, e);
    }
  }
  if (rep.min_ratio > rep.max_ratio) {
    // All samples degenerate; nothing to bound.
    rep.min_ratio = rep.max_ratio = 1.0;
  }
  rep.pass = rep.min_ratio >= B.lambda() * (1.0 - 1e-9) &&
             rep.max_ratio <= B.Lambda() * (1.0 + 1e-9);
  return rep;
}

void sym_eigen(const SymMat& m_in, int dim, std::array<double, kMaxDim>& evals,
               SymMat& evecs) {
  SymMat m = m_in;
  evecs = SymMat{};
  for (int a = 0; a < kMaxDim; ++a) evecs[a * kMaxDim + a] = 1.0;
  double scale = 0.0;
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) scale = std::max(scale, std::abs(m[a * kMaxDim + b]));
  for (int sweep = 0; sweep < 32; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < dim; ++p)
      for (int q = p + 1; q < dim; ++q) off += std::abs(m[p * kMaxDim + q]);
    if (off <= 1e-15 * std::max(scale, 1e-300)) break;
    for (int p = 0; p < dim; ++p)
      for (int q = p + 1; q < dim; ++q) {
        double apq = m[p * kMaxDim + q];
        if (std::abs(apq) < 1e-300) continue;
        double app = m[p * kMaxDim + p], aqq = m[q * kMaxDim + q];
        double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
        double c = std::cos(theta), s = std::sin(theta);
        for (int k = 0; k < dim; ++k) {
          double akp = m[k * kMaxDim + p], akq = m[k * kMaxDim + q];
          m[k * kMaxDim + p] = c * akp - s * akq;
          m[k * kMaxDim + q] = s * akp + c * akq;
        }
        for (int k = 0; k < dim; ++k) {
          double apk = m[p * kMaxDim + k], aqk = m[q * kMaxDim + k];
          m[p * kMaxDim + k] = c * apk - s * aqk;
          m[q * kMaxDim + k] = s * apk + c * aqk;
        }
        // Accumulate the rotation in the eigenvector rows.
        for (int k = 0; k < dim; ++k) {
          double vpk = evecs[p * kMaxDim + k], vqk = evecs[q * kMaxDim + k];
          evecs[p * kMaxDim + k] = c * vpk - s * vqk;
          evecs[q * kMaxDim + k] = s * vpk + c * vqk;
        }
      }
  }
  evals = {0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) evals[a] = m[a * kMaxDim + a];
}

namespace {
std::array<double, kMaxDim> sym_eigenvalues(const SymMat& m, int dim) {
  std::array<double, kMaxDim> ev;
  SymMat vecs;
  sym_eigen(m, dim, ev, vecs);
  return ev;
}
}  // namespace

double subunit_speed(const SymMat& A, int dim, const Vec& dir) {
  double nd = norm(dir);
  if (nd == 0.0) return 0.0;
  Vec e{dir[0] / nd, dir[1] / nd, dir[2] / nd};
  if (dim == 2) {
    const double a = A[0], b = A[1], c = A[4];
    double det = a * c - b * b;
    double amax = std::max({std::abs(a), std::abs(b), std::abs(c)});
    if (det > 1e-13 * amax * amax) {
      double q = (c * e[0] * e[0] - 2.0 * b * e[0] * e[1] + a * e[1] * e[1]) / det;
      return q > 0.0 ? 1.0 / std::sqrt(q) : 0.0;
    }
    // Rank <= 1: admissible motion only along the leading eigenvector.
    std::array<double, kMaxDim> ev;
    SymMat vecs;
    sym_eigen(A, 2, ev, vecs);
    int top = ev[0] >= ev[1] ? 0 : 1;
    if (ev[top] <= 0.0) return 0.0;
    Vec v{vecs[top * kMaxDim + 0], vecs[top * kMaxDim + 1], 0.0};
    double p = dot(v, e);
    if (1.0 - p * p > 1e-12) return 0.0;
    return std::sqrt(ev[top]);
  }
  std::array<double, kMaxDim> ev;
  SymMat vecs;
  sym_eigen(A, dim, ev, vecs);
  double emax = 0.0;
  for (int a = 0; a < dim; ++a) emax = std::max(emax, ev[a]);
  if (emax <= 0.0) return 0.0;
  double q = 0.0, null_part = 0.0;
  for (int a = 0; a < dim; ++a) {
    Vec v{vecs[a * kMaxDim + 0], vecs[a * kMaxDim + 1], vecs[a * kMaxDim + 2]};
    double p = dot(v, e);
    if (ev[a] <= 1e-13 * emax)
      null_part += p * p;
    else
      q += p * p / ev[a];
  }
  if (null_part > 1e-12) return 0.0;
  return q > 0.0 ? 1.0 / std::sqrt(q) : 0.0;
}

double subunit_speed(const FieldFamily& family, const Vec& x, const Vec& dir) {
  return subunit_speed(family.structure_matrix(x), family.dim(), dir);
}

double sym_eig_min(const SymMat& m, int dim) {
  auto ev = sym_eigenvalues(m, dim);
  double r = ev[0];
  for (int a = 1; a < dim; ++a) r = std::min(r, ev[a]);
  return r;
}

double sym_eig_max(const SymMat& m, int dim) {
  auto ev = sym_eigenvalues(m, dim);
  double r = ev[0];
  for (int a = 1; a < dim; ++a) r = std::max(r, ev[a]);
  return r;
}

}  // namespace xe::fields
