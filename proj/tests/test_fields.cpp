#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "xe/fields.hpp"

using namespace xe;
using namespace xe::fields;

namespace {
Grid small_grid(int dim) {
  if (dim == 2)
    return Grid(BoundingBox(2, {-1, -1, 0}, {1, 1, 0}, {64, 64, 1}));
  return Grid(BoundingBox(3, {-1, -1, -1}, {1, 1, 1}, {16, 16, 16}));
}
}  // namespace

TEST_CASE("structure matrix of the euclidean family is the identity") {
  auto fam = FieldFamily::euclidean(2);
  SymMat A = fam.structure_matrix({0.3, -0.7, 0});
  CHECK(A[0] == doctest::Approx(1.0));
  CHECK(A[4] == doctest::Approx(1.0));
  CHECK(A[1] == doctest::Approx(0.0));
  CHECK(fam.constant_structure());
}

TEST_CASE("grushin structure matrix") {
  auto fam = FieldFamily::grushin(2, 1.0);
  SymMat A = fam.structure_matrix({0.5, 0.2, 0});
  CHECK(A[0] == doctest::Approx(1.0));
  CHECK(A[4] == doctest::Approx(0.25));
  CHECK(A[1] == doctest::Approx(0.0));

  SymMat A0 = fam.structure_matrix({0.0, 0.9, 0});
  CHECK(A0[4] == doctest::Approx(0.0));  // rank drops on the degeneracy locus
  CHECK(sym_eig_min(A0, 2) == doctest::Approx(0.0));
  CHECK(sym_eig_max(A0, 2) == doctest::Approx(1.0));
}

TEST_CASE("structure matrices are PSD at random nodes") {
  Grid g2 = small_grid(2);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> pick(0, g2.n_nodes - 1);
  for (auto fam : {FieldFamily::euclidean(2), FieldFamily::grushin(2, 2.0)}) {
    for (int t = 0; t < 200; ++t) {
      SymMat A = fam.structure_matrix(g2.position(pick(rng)));
      CHECK(sym_eig_min(A, 2) >= -1e-12 * std::max(1.0, sym_eig_max(A, 2)));
    }
  }
  Grid g3 = small_grid(3);
  std::uniform_int_distribution<std::int64_t> pick3(0, g3.n_nodes - 1);
  auto heis = FieldFamily::heisenberg();
  for (int t = 0; t < 200; ++t) {
    SymMat A = heis.structure_matrix(g3.position(pick3(rng)));
    CHECK(sym_eig_min(A, 3) >= -1e-12 * std::max(1.0, sym_eig_max(A, 3)));
    // Two fields only: the structure matrix has rank two.
    CHECK(sym_eig_min(A, 3) <= 1e-12);
  }
}

TEST_CASE("sampled Lipschitz quotients stay under the declared bound") {
  Grid g = small_grid(2);
  BoundingBox box = g.box;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DiagonalProfile bump;
  bump.kind = DiagonalProfile::Kind::Bump;
  bump.center = {0.2, 0.1, 0};
  bump.radius = 0.3;
  bump.floor_value = 0.1;
  DiagonalProfile one;
  for (auto fam : {FieldFamily::grushin(2, 1.5), FieldFamily::diagonal(2, {bump, one})}) {
    double L = fam.lipschitz_bound(box);
    for (int t = 0; t < 500; ++t) {
      Vec x{u(rng), u(rng), 0}, y{u(rng), u(rng), 0};
      double dxy = norm(sub(x, y));
      if (dxy < 1e-9) continue;
      for (int j = 0; j < fam.count(); ++j) {
        double dv = norm(sub(fam.evaluate(j, x), fam.evaluate(j, y)));
        CHECK(dv <= L * dxy * (1.0 + 1e-9) + 1e-12);
      }
    }
  }
}

TEST_CASE("check_x_ellipticity") {
  Grid g = small_grid(2);
  auto fam = FieldFamily::grushin(2, 1.0);

  SUBCASE("B equal to the structure matrix has unit ratios") {
    auto B = CoefficientMatrix::structure(fam);
    auto rep = check_x_ellipticity(B, fam, g, 500, 5);
    CHECK(rep.pass);
    CHECK(rep.min_ratio == doctest::Approx(1.0));
    CHECK(rep.max_ratio == doctest::Approx(1.0));
  }

  SUBCASE("doubled structure matrix passes a declared [0.5, 3] band") {
    CoefficientMatrix B(
        "doubled",
        [fam](const Vec& x) {
          SymMat A = fam.structure_matrix(x);
          for (auto& v : A) v *= 2.0;
          return A;
        },
        0.5, 3.0, false);
    auto rep = check_x_ellipticity(B, fam, g, 500, 6);
    CHECK(rep.pass);
    CHECK(rep.min_ratio == doctest::Approx(2.0));
    CHECK(rep.max_ratio == doctest::Approx(2.0));
  }

  SUBCASE("sandwich perturbation stays in its constructed band") {
    auto B = CoefficientMatrix::perturbed(fam, g.box, 0.5, 2.0, 99);
    auto rep = check_x_ellipticity(B, fam, g, 4000, 7);
    CHECK(rep.pass);
    CHECK(rep.min_ratio >= 0.5 * (1 - 1e-9));
    CHECK(rep.max_ratio <= 2.0 * (1 + 1e-9));
    CHECK(rep.skipped_degenerate > 0);  // the x1 = 0 column is degenerate
  }

  SUBCASE("euclidean perturbation: numeric eigenvalue oracle") {
    auto eu = FieldFamily::euclidean(2);
    auto B = CoefficientMatrix::perturbed(eu, g.box, 0.5, 2.0, 42);
    SymMat Bc = B.evaluate({0.1, 0.2, 0});
    CHECK(sym_eig_min(Bc, 2) >= 0.5 - 1e-9);
    CHECK(sym_eig_max(Bc, 2) <= 2.0 + 1e-9);
    CHECK(std::abs(Bc[1]) > 1e-6);  // genuinely mixed terms
  }

  SUBCASE("positive B over a degenerate direction is a violation") {
    // Identity coefficients are not X-elliptic for the grushin family.
    auto B = CoefficientMatrix::diagonal(2, {1.0, 1.0});
    CHECK_THROWS_AS(check_x_ellipticity(B, fam, g, 2000, 8), NumericalError);
  }
}

TEST_CASE("matrix constructors validate their bands") {
  auto fam = FieldFamily::euclidean(2);
  CHECK_THROWS_AS(CoefficientMatrix::scaled(fam, -1.0), ConfigError);
  CHECK_THROWS_AS(CoefficientMatrix::diagonal(2, {1.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(FieldFamily::grushin(2, 0.5), ConfigError);
}
