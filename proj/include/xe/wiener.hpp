#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xe/potential.hpp"

namespace xe::wiener {

// Calibrated classification thresholds; reported with every verdict since
// the dichotomy carries no rate. Slopes are per dyadic level, in log2 units.
struct WienerThresholds {
  double regular_slope = -0.1;    // series terms not decaying
  double irregular_slope = -0.5;  // at least geometric decay, ratio <= 2^-0.5
  double regular_limit = 0.9;     // last potential-limit estimate
  double limit_drop = 0.02;       // slack for the decreasing-trend test
  std::int64_t min_cells = 8;     // resolution floor for a level
  double thin_limit = 0.5;        // sub-resolution thin-fraction cutoff
};

struct WienerConfig {
  double lambda = 0.5;
  int levels = 6;
  double rho0 = 0.0;  // largest radius; 0 selects 4h / lambda^(levels-1)
  WienerThresholds thresholds;
};

struct WienerLevel {
  double rho = 0.0;
  double cap = 0.0;        // cap(K_rho)
  double ball_cap = 0.0;   // cap(closed ball B_rho(y)): divergence baseline
  double ball_volume = 0.0;
  std::int64_t K_cells = 0;
  std::int64_t ball_cells = 0;
  double limit_est = 0.0;
  double term = 0.0;   // lambda^{2k} cap / |B_rho|
  double theta = 0.0;  // |K_rho| / |B_rho| cellwise
  double thin = 0.0;
  bool truncated = false;
  bool valid = false;  // passes the per-level resolution checks
};

struct CapacityProfile {
  Vec y{};
  std::int64_t y_node = -1;
  double lambda = 0.5;
  double rho0 = 0.0;
  std::vector<WienerLevel> levels;
  double integral_estimate = 0.0;  // sum_k term_k * ln(1/lambda)
};

enum class Verdict { Regular, Irregular, Inconclusive };

std::string to_string(Verdict v);

struct RegularityVerdict {
  Verdict verdict = Verdict::Inconclusive;
  double slope = 0.0;      // classifier slope: log2(cap/ball_cap) per level,
                           // fitted over the last <= 4 resolution-valid levels
  double slope_raw = 0.0;  // log2(term) per level over the last 4 levels
  double last_limit_est = 0.0;
  bool limit_decreasing = false;
  int valid_levels = 0;
  double theta_min = 0.0;  // density evidence across levels
  std::vector<std::string> flags;
  WienerThresholds thresholds;
};

// One capacity / ball-volume / potential-limit record per dyadic level,
// plus the dyadic quadrature of the criterion integral. The capacity of the
// full closed ball is solved alongside as the always-divergent reference.
// `dist_y` must be the control distance from the (already snapped) boundary
// node of Omega.
CapacityProfile wiener_profile(const solver::EnergyForm& form,
                               const geometry::GridDomain& domain,
                               const metric::DistanceField& dist_y,
                               const WienerConfig& cfg,
                               const solver::SolverOptions& opts = {});

// Documented fusion rule over the series and potential-limit evidence:
//   REGULAR    iff slope >= regular_slope on >= 2 valid levels and the last
//              valid potential-limit estimate >= regular_limit;
//   IRREGULAR  iff slope <= irregular_slope on >= 2 valid levels and the
//              limit estimates decrease across levels;
//   otherwise INCONCLUSIVE, with per-level resolution flags.
RegularityVerdict classify(const CapacityProfile& profile,
                           const WienerThresholds& thresholds = {});

struct ConeCheck {
  std::vector<double> radii;
  std::vector<double> theta;  // |K_r| / |B_r(y)| per radius
  double theta_min_seen = 0.0;
  bool pass = false;
};

// Volume-density test of the cone criterion: theta(r) over the radius list,
// pass iff min theta >= theta_min.
ConeCheck cone_check(const geometry::GridDomain& domain,
                     const metric::DistanceField& dist_y,
                     const std::vector<double>& r_list, double theta_min);

struct InvarianceResult {
  std::vector<RegularityVerdict> verdicts;
  std::vector<CapacityProfile> profiles;
  bool agree = false;  // all non-inconclusive verdicts coincide
};

// Corollary-style harness: the same geometry and fields under several
// admissible coefficient matrices. Every matrix must pass the X-ellipticity
// sampling check for the family before any solve runs.
InvarianceResult invariance_harness(
    const geometry::GridDomain& domain, const fields::FieldFamily& family,
    const std::vector<fields::CoefficientMatrix>& matrices, const Vec& y,
    const WienerConfig& cfg, std::uint64_t seed,
    const solver::SolverOptions& opts = {});

}  // namespace xe::wiener
