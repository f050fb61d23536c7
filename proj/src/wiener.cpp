#include "xe/wiener.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xe::wiener {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Regular:
      return "regular";
    case Verdict::Irregular:
      return "irregular";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

namespace {

// Least-squares slope of y against 0..m-1.
double ls_slope(const std::vector<double>& y) {
  const std::size_t m = y.size();
  double xm = 0.5 * double(m - 1), ym = 0.0;
  for (double v : y) ym += v;
  ym /= double(m);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    num += (double(i) - xm) * (y[i] - ym);
    den += (double(i) - xm) * (double(i) - xm);
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace

CapacityProfile wiener_profile(const solver::EnergyForm& form,
                               const geometry::GridDomain& domain,
                               const metric::DistanceField& dist_y,
                               const WienerConfig& cfg,
                               const solver::SolverOptions& opts) {
  const Grid& g = form.grid();
  const double h = g.h();
  const double hN = std::pow(h, g.dim());
  if (cfg.lambda < 0.3 || cfg.lambda > 0.7)
    throw ConfigError("wiener_profile: lambda must lie in [0.3, 0.7]");
  if (cfg.levels < 4)
    throw ConfigError("wiener_profile: need at least 4 levels");

  double rho0 = cfg.rho0;
  if (rho0 <= 0.0) rho0 = 4.0 * h / std::pow(cfg.lambda, cfg.levels - 1);
  if (rho0 * std::pow(cfg.lambda, cfg.levels - 1) < 4.0 * h * (1.0 - 1e-12))
    throw ConfigError("wiener_profile: smallest level falls under 4h");

  CapacityProfile prof;
  prof.y_node = dist_y.source;
  prof.y = g.position(prof.y_node);
  prof.lambda = cfg.lambda;
  prof.rho0 = rho0;
  if (!std::binary_search(domain.boundary_nodes.begin(),
                          domain.boundary_nodes.end(), prof.y_node))
    throw GeometryError("wiener_profile: distance source is not a boundary node of Omega");

  ScalarField warm_K, warm_ball;
  double lam2k = 1.0;
  for (int k = 0; k < cfg.levels; ++k) {
    WienerLevel L;
    L.rho = rho0 * std::pow(cfg.lambda, k);

    auto K = geometry::compact_obstacle(domain, prof.y_node, L.rho, dist_y.values);
    std::vector<std::int64_t> closed_ball;
    for (std::int64_t i = 0; i < g.n_nodes; ++i)
      if (dist_y.values[static_cast<std::size_t>(i)] <= L.rho)
        closed_ball.push_back(i);
    auto open_ball = metric::ball(dist_y, L.rho);

    L.K_cells = static_cast<std::int64_t>(K.size());
    L.ball_cells = static_cast<std::int64_t>(closed_ball.size());
    L.ball_volume = double(open_ball.size()) * hN;
    L.theta = L.ball_cells > 0 ? double(L.K_cells) / double(L.ball_cells) : 0.0;
    L.thin = potential::thin_fraction(g, K);
    for (std::int64_t i : open_ball)
      if (g.on_face(g.coords(i))) L.truncated = true;

    auto capK = potential::capacity(form, K, opts,
                                    warm_K.grid ? &warm_K : nullptr);
    auto capB = potential::capacity(form, closed_ball, opts,
                                    warm_ball.grid ? &warm_ball : nullptr);
    L.cap = capK.capacity;
    L.ball_cap = capB.capacity;
    L.limit_est = potential::boundary_limit_estimate(capK.u0, domain, prof.y_node);
    L.term = L.ball_volume > 0.0 ? lam2k * L.cap / L.ball_volume : 0.0;
    L.valid = L.K_cells >= cfg.thresholds.min_cells &&
              L.thin <= cfg.thresholds.thin_limit && !L.truncated;

    prof.integral_estimate += L.term * std::log(1.0 / cfg.lambda);
    prof.levels.push_back(L);
    warm_K = std::move(capK.u0);
    warm_ball = std::move(capB.u0);
    lam2k *= cfg.lambda * cfg.lambda;
  }
  return prof;
}

RegularityVerdict classify(const CapacityProfile& profile,
                           const WienerThresholds& th) {
  if (profile.levels.size() < 4)
    throw ConfigError("classify: need at least 4 levels");
  RegularityVerdict v;
  v.thresholds = th;

  // Raw term slope over the last 4 levels (reported, not decisive).
  {
    std::vector<double> logs;
    std::size_t first = profile.levels.size() - 4;
    for (std::size_t k = first; k < profile.levels.size(); ++k)
      logs.push_back(std::log2(std::max(profile.levels[k].term, 1e-300)));
    v.slope_raw = ls_slope(logs);
  }

  // Classifier slope: obstacle capacity against the full-ball capacity at
  // the same level, over the last <= 4 resolution-valid levels.
  std::vector<double> valid_logs;
  int last_valid = -1;
  for (std::size_t k = 0; k < profile.levels.size(); ++k) {
    const auto& L = profile.levels[k];
    if (!L.valid) continue;
    ++v.valid_levels;
    last_valid = static_cast<int>(k);
  }
  for (std::size_t k = 0; k < profile.levels.size(); ++k) {
    const auto& L = profile.levels[k];
    if (!L.valid || L.ball_cap <= 0.0 || L.cap <= 0.0) continue;
    valid_logs.push_back(std::log2(L.cap / L.ball_cap));
  }
  if (valid_logs.size() > 4) valid_logs.erase(valid_logs.begin(), valid_logs.end() - 4);
  bool series_ok = valid_logs.size() >= 2;
  v.slope = series_ok ? ls_slope(valid_logs) : 0.0;

  // Potential-limit evidence across all levels.
  const auto& lv = profile.levels;
  v.last_limit_est = last_valid >= 0 ? lv[static_cast<std::size_t>(last_valid)].limit_est
                                     : lv.back().limit_est;
  double max_rise = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < lv.size(); ++k)
    max_rise = std::max(max_rise, lv[k + 1].limit_est - lv[k].limit_est);
  v.limit_decreasing = max_rise <= th.limit_drop &&
                       lv.back().limit_est <= lv.front().limit_est - th.limit_drop;

  v.theta_min = std::numeric_limits<double>::infinity();
  for (const auto& L : lv) v.theta_min = std::min(v.theta_min, L.theta);

  for (std::size_t k = 0; k < lv.size(); ++k) {
    if (lv[k].K_cells < th.min_cells)
      v.flags.push_back("level " + std::to_string(k) + ": obstacle under " +
                        std::to_string(th.min_cells) + " cells");
    if (lv[k].thin > th.thin_limit)
      v.flags.push_back("level " + std::to_string(k) +
                        ": sub-resolution thin obstacle");
    if (lv[k].truncated)
      v.flags.push_back("level " + std::to_string(k) + ": ball truncated by the box");
  }
  if (!series_ok)
    v.flags.push_back("series evidence void: fewer than 2 resolution-valid levels");
  else if (v.valid_levels < static_cast<int>(lv.size()))
    v.flags.push_back("series evidence limited to " +
                      std::to_string(v.valid_levels) + " valid levels");

  if (series_ok && v.slope >= th.regular_slope && v.last_limit_est >= th.regular_limit)
    v.verdict = Verdict::Regular;
  else if (series_ok && v.slope <= th.irregular_slope && v.limit_decreasing)
    v.verdict = Verdict::Irregular;
  else
    v.verdict = Verdict::Inconclusive;
  return v;
}

ConeCheck cone_check(const geometry::GridDomain& domain,
                     const metric::DistanceField& dist_y,
                     const std::vector<double>& r_list, double theta_min) {
  const Grid& g = *domain.grid;
  ConeCheck out;
  out.radii = r_list;
  out.theta_min_seen = std::numeric_limits<double>::infinity();
  for (double r : r_list) {
    if (r <= 4.0 * g.h() * (1.0 - 1e-12))
      throw ConfigError("cone_check: radii must exceed 4h");
    std::int64_t ball_n = 0, k_n = 0;
    for (std::int64_t i = 0; i < g.n_nodes; ++i) {
      if (dist_y.values[static_cast<std::size_t>(i)] <= r) {
        ++ball_n;
        if (!domain.in_Omega(i)) ++k_n;
      }
    }
    double theta = ball_n > 0 ? double(k_n) / double(ball_n) : 0.0;
    out.theta.push_back(theta);
    out.theta_min_seen = std::min(out.theta_min_seen, theta);
  }
  out.pass = out.theta_min_seen >= theta_min;
  return out;
}

InvarianceResult invariance_harness(
    const geometry::GridDomain& domain, const fields::FieldFamily& family,
    const std::vector<fields::CoefficientMatrix>& matrices, const Vec& y,
    const WienerConfig& cfg, std::uint64_t seed,
    const solver::SolverOptions& opts) {
  if (matrices.empty())
    throw ConfigError("invariance_harness: no coefficient matrices");
  const Grid& g = *domain.grid;

  for (const auto& B : matrices) {
    auto rep = fields::check_x_ellipticity(B, family, g, 2000, seed);
    if (!rep.pass)
      throw ConfigError("invariance_harness: matrix '" + B.name() +
                        "' fails the X-ellipticity sampling check");
  }

  std::int64_t y_node = geometry::snap_boundary_point(domain, y);
  auto dist = metric::control_distance_from(family, {y_node}, g);

  InvarianceResult out;
  for (const auto& B : matrices) {
    solver::EnergyForm form(g, domain.mask_D, B);
    auto prof = wiener_profile(form, domain, dist, cfg, opts);
    out.verdicts.push_back(classify(prof, cfg.thresholds));
    out.profiles.push_back(std::move(prof));
  }
  out.agree = true;
  bool seen = false;
  Verdict ref = Verdict::Inconclusive;
  for (const auto& v : out.verdicts) {
    if (v.verdict == Verdict::Inconclusive) continue;
    if (!seen) {
      ref = v.verdict;
      seen = true;
    } else if (v.verdict != ref) {
      out.agree = false;
    }
  }
  return out;
}

}  // namespace xe::wiener
