#pragma once

#include <cstdint>
#include <vector>

#include "xe/fields.hpp"
#include "xe/grid.hpp"

namespace xe::metric {

// Single-source control distance on the grid graph. Nodes with no sub-unit
// path from the source carry +infinity.
struct DistanceField {
  const Grid* grid = nullptr;
  std::int64_t source = -1;
  std::vector<double> values;
  std::int64_t unreachable = 0;

  double at(std::int64_t i) const { return values[static_cast<std::size_t>(i)]; }
};

// Shortest path over the full 3^N-1 neighbor stencil. The admissible speed
// along a lattice edge is the top speed of a sub-unit curve in the edge
// direction at the edge midpoint (1/sqrt(<A^+ e, e>) for the structure
// matrix pseudoinverse); the edge cost is the Euclidean edge length divided
// by that speed. Directions outside the admissible cone get no edge, so
// degenerate loci force genuine detours.
DistanceField control_distance(const fields::FieldFamily& family,
                               const Vec& source, const Grid& grid);

// Same metric graph, distance to the nearest of several source nodes.
DistanceField control_distance_from(const fields::FieldFamily& family,
                                    const std::vector<std::int64_t>& sources,
                                    const Grid& grid);

// Worst-case factor by which the discrete stencil metric overestimates the
// Euclidean distance (2D: sec(pi/8) ~ 1.0824).
double metrication_factor(int dim);

// Stencil path length of a straight segment in direction dir, per unit
// Euclidean length (the exact discrete-over-continuum ratio for the
// euclidean family).
double stencil_path_factor(const Vec& dir, int dim);

// Open ball {d < r} as a node index set.
std::vector<std::int64_t> ball(const DistanceField& dist, double r);

struct VolumeProfile {
  Vec center{};
  std::vector<double> radii;
  std::vector<double> volumes;          // node count * h^N for B_r
  std::vector<double> doubling_ratios;  // |B_2r| / |B_r|
  std::vector<std::uint8_t> truncated;  // B_2r touches the bounding box
  double A_est = 0.0;                   // max doubling ratio
  double Q_est = 0.0;                   // log2(A_est)
};

VolumeProfile volume_profile(const DistanceField& dist,
                             const std::vector<double>& radii);

struct ReverseDoubling {
  double beta_est = 0.0;  // max over radii of |B_r| / |B_2r|
  double mu_est = 0.0;    // log2(1 / beta_est)
  bool violated = false;  // beta_est ~ 1: volume fails to grow
};

ReverseDoubling reverse_doubling(const VolumeProfile& profile);

// (mean_{B_r} |u - u_r|) / (r * mean_{B_2r} |Xu|) with |Xu|^2 = sum_j
// <X_j, grad_h u>^2 via centered differences. Returns +infinity only when
// the denominator vanishes while the numerator does not.
double poincare_ratio(const fields::FieldFamily& family, const ScalarField& u,
                      const std::vector<std::int64_t>& ball_r,
                      const std::vector<std::int64_t>& ball_2r, double r);

// Centered-difference gradient at a node (one-sided on box faces).
Vec node_gradient(const ScalarField& u, std::int64_t node);

// |Xu| at a node for the given family.
double x_gradient_norm(const fields::FieldFamily& family, const ScalarField& u,
                       std::int64_t node);

// Number of stencil-connected components of the discrete sphere (the
// surface node layer of the ball {d < r}); the proxy for connected small
// d-sphere boundaries.
int shell_components(const DistanceField& dist, double r);

}  // namespace xe::metric
