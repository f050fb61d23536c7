// Test-only oracles: closed forms and independent fits the suites check
// against. Nothing here touches the library's computational paths.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "xe/grid.hpp"

namespace oracle {

constexpr double kPi = 3.14159265358979323846;

// Capacity of the concentric disk pair (2D): minimizer is the radial
// logarithm, cap = 2 pi / ln(R/r).
inline double disk_capacity_2d(double r, double R) { return 2.0 * kPi / std::log(R / r); }

// Capacity of concentric balls (3D): cap = 4 pi / (1/r - 1/R).
inline double ball_capacity_3d(double r, double R) {
  return 4.0 * kPi / (1.0 / r - 1.0 / R);
}

// Green function of the unit-scale disk of radius R (2D, Laplacian):
// g(x,y) = (1/2pi) [ ln(1/|x-y|) + ln(|y| |x - y*| / R) ], y* = R^2 y/|y|^2.
inline double disk_green_2d(const xe::Vec& x, const xe::Vec& y, double R) {
  double dx = x[0] - y[0], dy = x[1] - y[1];
  double d = std::sqrt(dx * dx + dy * dy);
  double ny = std::sqrt(y[0] * y[0] + y[1] * y[1]);
  if (ny < 1e-14) return (1.0 / (2.0 * kPi)) * std::log(R / d);
  double ys0 = R * R * y[0] / (ny * ny), ys1 = R * R * y[1] / (ny * ny);
  double ds = std::hypot(x[0] - ys0, x[1] - ys1);
  return (1.0 / (2.0 * kPi)) * (std::log(1.0 / d) + std::log(ny * ds / R));
}

// Least-squares slope of y over x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= double(x.size());
  ym /= double(x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - xm) * (y[i] - ym);
    den += (x[i] - xm) * (x[i] - xm);
  }
  return num / den;
}

// Best single coefficient for y ~ c * f, least squares.
inline double fit_coefficient(const std::vector<double>& f,
                              const std::vector<double>& y) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    num += f[i] * y[i];
    den += f[i] * f[i];
  }
  return num / den;
}

// Smooth random trigonometric nodal data (same construction the validation
// battery uses, but maintained independently on the test side).
inline xe::ScalarField trig_field(const xe::Grid& g, std::uint64_t seed,
                                  int terms = 4, int max_freq = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_int_distribution<int> freq(1, max_freq);
  xe::ScalarField u(g, 0.0);
  for (int t = 0; t < terms; ++t) {
    xe::Vec k{0, 0, 0};
    for (int a = 0; a < g.dim(); ++a) k[a] = freq(rng) * kPi;
    double a0 = amp(rng), ph = amp(rng) * kPi;
    for (std::int64_t i = 0; i < g.n_nodes; ++i) {
      xe::Vec p = g.position(i);
      u.values[static_cast<std::size_t>(i)] += a0 * std::cos(xe::dot(k, p) + ph);
    }
  }
  return u;
}

}  // namespace oracle
