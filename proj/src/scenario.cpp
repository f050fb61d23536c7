#include "xe/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "xe/io.hpp"
#include "xe/metric.hpp"
#include "xe/potential.hpp"

namespace xe::scenario {

using nlohmann::json;

namespace {

Vec to_vec(const json& j, const char* what) {
  if (!j.is_array() || j.size() < 1 || j.size() > kMaxDim)
    throw ConfigError(std::string("scenario: ") + what + " must be an array of 1..3 numbers");
  Vec v{0.0, 0.0, 0.0};
  for (std::size_t a = 0; a < j.size(); ++a) v[a] = j[a].get<double>();
  return v;
}

std::vector<double> to_doubles(const json& j) {
  std::vector<double> v;
  for (const auto& e : j) v.push_back(e.get<double>());
  return v;
}

}  // namespace

geometry::ShapePtr parse_shape(const json& j) {
  if (!j.is_object() || j.size() != 1)
    throw ConfigError("scenario: a shape is a single-key object");
  const std::string kind = j.begin().key();
  const json& b = j.begin().value();
  if (kind == "ball")
    return geometry::make_ball(to_vec(b.at("center"), "ball.center"),
                               b.at("radius").get<double>());
  if (kind == "box")
    return geometry::make_box(to_vec(b.at("lo"), "box.lo"),
                              to_vec(b.at("hi"), "box.hi"));
  if (kind == "halfspace")
    return geometry::make_halfspace(to_vec(b.at("normal"), "halfspace.normal"),
                                    b.at("offset").get<double>());
  if (kind == "point_cell")
    return geometry::make_point_cell(to_vec(b.at("center"), "point_cell.center"));
  if (kind == "spine") {
    int axis = b.at("axis").get<int>();
    Vec tip = to_vec(b.at("tip"), "spine.tip");
    double scale = b.value("scale", 1.0);
    double length = b.value("length", 1.0);
    std::string prof = b.value("profile", "exp");
    if (prof == "exp")
      return geometry::make_spine_exp(axis, tip, b.value("kappa", 1.0), scale,
                                      length);
    if (prof == "power")
      return geometry::make_spine_power(axis, tip, b.value("exponent", 2.0),
                                        scale, length);
    throw ConfigError("scenario: spine.profile must be 'exp' or 'power'");
  }
  if (kind == "union" || kind == "intersection") {
    std::vector<geometry::ShapePtr> parts;
    for (const auto& c : b) parts.push_back(parse_shape(c));
    return kind == "union" ? geometry::make_union(std::move(parts))
                           : geometry::make_intersection(std::move(parts));
  }
  if (kind == "complement") return geometry::make_complement(parse_shape(b));
  if (kind == "difference") {
    if (!b.is_array() || b.size() != 2)
      throw ConfigError("scenario: difference takes [a, b]");
    return geometry::make_difference(parse_shape(b[0]), parse_shape(b[1]));
  }
  throw ConfigError("scenario: unknown shape kind '" + kind + "'");
}

Scenario parse_scenario(json j) {
  Scenario s;
  s.raw = j;
  s.name = j.value("name", std::string("scenario"));
  s.seed = j.value("seed", std::uint64_t{0});
  s.threads = j.value("threads", 0);
  s.cell_budget = j.value("cell_budget", std::int64_t{1} << 24);

  const json& bx = j.at("box");
  Vec lo = to_vec(bx.at("lo"), "box.lo");
  Vec hi = to_vec(bx.at("hi"), "box.hi");
  int dim = static_cast<int>(bx.at("lo").size());
  IVec nc{1, 1, 1};
  if (bx.at("n_cells").is_array()) {
    auto v = to_doubles(bx.at("n_cells"));
    for (std::size_t a = 0; a < v.size(); ++a) nc[a] = static_cast<int>(v[a]);
  } else {
    int n = bx.at("n_cells").get<int>();
    for (int a = 0; a < dim; ++a) nc[a] = n;
  }
  std::int64_t cells = 1;
  for (int a = 0; a < dim; ++a) cells *= nc[a];
  if (cells > s.cell_budget)
    throw ConfigError("scenario: grid exceeds the cell budget (" +
                      std::to_string(cells) + " > " +
                      std::to_string(s.cell_budget) + ")");
  s.box = BoundingBox(dim, lo, hi, nc);

  const json& shapes = j.at("shapes");
  s.shape_D = parse_shape(shapes.at("D"));
  if (shapes.contains("omega")) s.shape_Omega = parse_shape(shapes.at("omega"));
  if (j.contains("obstacle")) s.obstacle = parse_shape(j.at("obstacle"));

  s.family_cfg = j.value("family", json{{"name", "euclidean"}});
  if (j.contains("matrices"))
    for (const auto& m : j.at("matrices")) s.matrix_cfgs.push_back(m);
  else
    s.matrix_cfgs.push_back(j.value("matrix", json{{"type", "structure"}}));

  if (j.contains("points")) {
    const json& p = j.at("points");
    if (p.contains("y")) s.y = to_vec(p.at("y"), "points.y");
    if (p.contains("pole")) s.pole = to_vec(p.at("pole"), "points.pole");
    if (p.contains("sources"))
      for (const auto& src : p.at("sources"))
        s.sources.push_back(to_vec(src, "points.sources[]"));
  }
  if (j.contains("radii")) s.radii = to_doubles(j.at("radii"));
  if (j.contains("cone")) {
    s.r_list = to_doubles(j.at("cone").at("r_list"));
    s.theta_min = j.at("cone").value("theta_min", 0.1);
  }

  if (j.contains("wiener")) {
    const json& w = j.at("wiener");
    s.wiener_cfg.lambda = w.value("lambda", 0.5);
    s.wiener_cfg.levels = w.value("levels", 6);
    s.wiener_cfg.rho0 = w.value("rho0", 0.0);
    if (w.contains("thresholds")) {
      const json& t = w.at("thresholds");
      auto& th = s.wiener_cfg.thresholds;
      th.regular_slope = t.value("regular_slope", th.regular_slope);
      th.irregular_slope = t.value("irregular_slope", th.irregular_slope);
      th.regular_limit = t.value("regular_limit", th.regular_limit);
      th.limit_drop = t.value("limit_drop", th.limit_drop);
      th.min_cells = t.value("min_cells", th.min_cells);
      th.thin_limit = t.value("thin_limit", th.thin_limit);
    }
  }
  if (j.contains("solver")) {
    const json& so = j.at("solver");
    s.solver_opts.rtol = so.value("rtol", 1e-9);
    s.solver_opts.maxit_factor = so.value("maxit_factor", 50.0);
    s.solver_opts.maxit = so.value("maxit", -1);
  }
  s.solver_opts.threads = s.threads;
  if (j.contains("reference")) s.reference = j.at("reference").get<double>();
  return s;
}

Scenario load_scenario(const std::string& path,
                       const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  if (!f) throw ConfigError("scenario: cannot read " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: invalid JSON: ") + e.what());
  }
  for (const std::string& ov : overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must look like key.path=value");
    std::string key = ov.substr(0, eq), val = ov.substr(eq + 1);
    json parsed;
    try {
      parsed = json::parse(val);
    } catch (const json::exception&) {
      parsed = val;  // plain string
    }
    json* node = &j;
    std::size_t pos = 0;
    while (true) {
      auto dot = key.find('.', pos);
      std::string part = key.substr(pos, dot == std::string::npos
                                             ? std::string::npos
                                             : dot - pos);
      if (dot == std::string::npos) {
        (*node)[part] = parsed;
        break;
      }
      node = &(*node)[part];
      pos = dot + 1;
    }
  }
  try {
    return parse_scenario(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

fields::FieldFamily build_family(const Scenario& s) {
  const json& f = s.family_cfg;
  const std::string name = f.value("name", "euclidean");
  const int dim = s.box.dim;
  if (name == "euclidean") return fields::FieldFamily::euclidean(dim);
  if (name == "grushin")
    return fields::FieldFamily::grushin(dim, f.value("alpha", 1.0));
  if (name == "heisenberg") {
    if (dim != 3) throw ConfigError("family: heisenberg needs a 3D box");
    return fields::FieldFamily::heisenberg();
  }
  if (name == "diagonal") {
    std::vector<fields::DiagonalProfile> phis;
    for (const auto& pj : f.at("phis")) {
      fields::DiagonalProfile p;
      const std::string kind = pj.value("kind", "constant");
      if (kind == "constant") {
        p.kind = fields::DiagonalProfile::Kind::Constant;
        p.value = pj.value("value", 1.0);
      } else if (kind == "axis_power") {
        p.kind = fields::DiagonalProfile::Kind::AxisPower;
        p.axis = pj.value("axis", 0);
        p.exponent = pj.value("exponent", 1.0);
        p.value = pj.value("scale", 1.0);
      } else if (kind == "bump") {
        p.kind = fields::DiagonalProfile::Kind::Bump;
        p.center = to_vec(pj.at("center"), "phi.center");
        p.radius = pj.value("radius", 0.25);
        p.floor_value = pj.value("floor", 0.5);
      } else {
        throw ConfigError("family: unknown diagonal profile '" + kind + "'");
      }
      phis.push_back(p);
    }
    return fields::FieldFamily::diagonal(dim, std::move(phis));
  }
  throw ConfigError("family: unknown name '" + name + "'");
}

fields::CoefficientMatrix build_matrix(const Scenario& s,
                                       const fields::FieldFamily& family,
                                       std::size_t index) {
  if (index >= s.matrix_cfgs.size())
    throw ConfigError("scenario: matrix index out of range");
  const json& m = s.matrix_cfgs[index];
  const std::string type = m.value("type", "structure");
  if (type == "structure") return fields::CoefficientMatrix::structure(family);
  if (type == "scaled")
    return fields::CoefficientMatrix::scaled(family, m.value("factor", 1.0));
  if (type == "diagonal")
    return fields::CoefficientMatrix::diagonal(s.box.dim,
                                               to_doubles(m.at("entries")));
  if (type == "perturbed")
    return fields::CoefficientMatrix::perturbed(
        family, s.box, m.value("lambda", 0.5), m.value("Lambda", 2.0),
        m.value("seed", s.seed + 17 * (index + 1)));
  throw ConfigError("scenario: unknown matrix type '" + type + "'");
}

RunContext build_context(const Scenario& s) {
  RunContext ctx;
  ctx.grid = Grid(s.box);
  ctx.family = build_family(s);
#ifdef _OPENMP
  if (s.threads > 0) omp_set_num_threads(s.threads);
#endif
  if (s.shape_Omega) {
    ctx.domain = geometry::make_domain(ctx.grid, *s.shape_D, *s.shape_Omega);
    ctx.has_domain = true;
  } else {
    Mask d = geometry::rasterize(*s.shape_D, ctx.grid);
    ctx.domain = geometry::GridDomain(ctx.grid, d, Mask(d.size(), 0));
  }
  return ctx;
}

namespace {

std::string out_path(const std::string& out_dir, const Scenario& s,
                     const std::string& suffix) {
  std::string dir = out_dir.empty() ? "." : out_dir;
  return dir + "/" + s.name + "_" + suffix;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw ConfigError("io: cannot open " + path);
  f << j.dump(2) << "\n";
}

// Smooth random trigonometric data used by the validation battery.
ScalarField random_trig_field(const Grid& g, std::uint64_t seed, int terms = 4) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_int_distribution<int> freq(1, 3);
  struct Term {
    Vec k;
    double a, phase;
  };
  std::vector<Term> ts;
  for (int t = 0; t < terms; ++t) {
    Term tm;
    for (int a = 0; a < g.dim(); ++a) tm.k[a] = freq(rng) * 3.14159265358979323846;
    tm.a = amp(rng);
    tm.phase = amp(rng) * 3.14159265358979323846;
    ts.push_back(tm);
  }
  ScalarField u(g, 0.0);
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    Vec p = g.position(i);
    double v = 0.0;
    for (const auto& tm : ts) v += tm.a * std::cos(dot(tm.k, p) + tm.phase);
    u.values[static_cast<std::size_t>(i)] = v;
  }
  return u;
}

}  // namespace

json verdict_to_json(const wiener::RegularityVerdict& v,
                     const wiener::CapacityProfile& prof, const Scenario& s) {
  json out;
  out["point"] = {prof.y[0], prof.y[1], prof.y[2]};
  out["verdict"] = wiener::to_string(v.verdict);
  out["slope"] = v.slope;
  out["slope_raw"] = v.slope_raw;
  json series = json::array();
  for (const auto& L : prof.levels) series.push_back(L.limit_est);
  out["limit_est_series"] = series;
  out["theta"] = v.theta_min;
  out["flags"] = v.flags;
  out["integral_estimate"] = prof.integral_estimate;
  out["config"] = {
      {"lambda", prof.lambda},
      {"levels", prof.levels.size()},
      {"rho0", prof.rho0},
      {"seed", s.seed},
      {"thresholds",
       {{"regular_slope", v.thresholds.regular_slope},
        {"irregular_slope", v.thresholds.irregular_slope},
        {"regular_limit", v.thresholds.regular_limit},
        {"limit_drop", v.thresholds.limit_drop},
        {"min_cells", v.thresholds.min_cells},
        {"thin_limit", v.thresholds.thin_limit}}}};
  return out;
}

int run_classify(const Scenario& s, const std::string& out_dir) {
  if (!s.y) throw ConfigError("classify: scenario needs points.y");
  RunContext ctx = build_context(s);
  if (!ctx.has_domain) throw ConfigError("classify: scenario needs shapes.omega");
  auto B = build_matrix(s, ctx.family, 0);
  solver::EnergyForm form(ctx.grid, ctx.domain.mask_D, B);

  std::int64_t y_node = geometry::snap_boundary_point(ctx.domain, *s.y);
  auto dist = metric::control_distance_from(ctx.family, {y_node}, ctx.grid);
  auto prof = wiener::wiener_profile(form, ctx.domain, dist, s.wiener_cfg,
                                     s.solver_opts);
  auto verdict = wiener::classify(prof, s.wiener_cfg.thresholds);

  io::write_wiener_csv(out_path(out_dir, s, "profile.csv"), prof);
  json report = verdict_to_json(verdict, prof, s);
  write_json(out_path(out_dir, s, "verdict.json"), report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

int run_capacity(const Scenario& s, const std::string& out_dir) {
  if (!s.obstacle) throw ConfigError("capacity: scenario needs an obstacle shape");
  RunContext ctx = build_context(s);
  auto B = build_matrix(s, ctx.family, 0);
  solver::EnergyForm form(ctx.grid, ctx.domain.mask_D, B);

  Mask k_mask = geometry::rasterize(*s.obstacle, ctx.grid);
  std::vector<std::int64_t> K;
  for (std::int64_t i = 0; i < ctx.grid.n_nodes; ++i)
    if (k_mask[static_cast<std::size_t>(i)] &&
        ctx.domain.mask_D[static_cast<std::size_t>(i)])
      K.push_back(i);
  auto cap = potential::capacity(form, K, s.solver_opts);

  json report;
  report["capacity"] = cap.capacity;
  report["total_measure"] = cap.total_measure;
  report["negative_measure_entries"] = cap.negative_measure_entries;
  report["K_cells"] = cap.K.size();
  report["u_range"] = {cap.u_min, cap.u_max};
  report["iterations"] = cap.stats.iterations;
  if (s.reference) {
    report["reference"] = *s.reference;
    report["relative_error"] =
        std::abs(cap.capacity - *s.reference) / std::abs(*s.reference);
  }
  write_json(out_path(out_dir, s, "capacity.json"), report);
  io::dump_field(out_path(out_dir, s, "potential.bin"), ctx.grid, cap.u0.values);
  std::cout << "capacity = " << io::format_double(cap.capacity);
  if (s.reference)
    std::cout << "   reference = " << io::format_double(*s.reference);
  std::cout << "\n";
  return 0;
}

int run_distance(const Scenario& s, const std::string& out_dir) {
  RunContext ctx = build_context(s);
  std::vector<Vec> sources = s.sources;
  if (sources.empty() && s.y) sources.push_back(*s.y);
  if (sources.empty()) throw ConfigError("distance: scenario needs sources or y");
  json report = json::array();
  for (std::size_t i = 0; i < sources.size(); ++i) {
    auto dist = metric::control_distance(ctx.family, sources[i], ctx.grid);
    io::dump_field(out_path(out_dir, s, "dist_" + std::to_string(i) + ".bin"),
                   ctx.grid, dist.values);
    json entry;
    entry["source"] = {sources[i][0], sources[i][1], sources[i][2]};
    entry["unreachable"] = dist.unreachable;
    if (!s.radii.empty()) {
      auto vp = metric::volume_profile(dist, s.radii);
      io::write_volume_profile_csv(
          out_path(out_dir, s, "volumes_" + std::to_string(i) + ".csv"), vp);
      auto rd = metric::reverse_doubling(vp);
      entry["A_est"] = vp.A_est;
      entry["Q_est"] = vp.Q_est;
      entry["beta_est"] = rd.beta_est;
      entry["mu_est"] = rd.mu_est;
      entry["reverse_doubling_violated"] = rd.violated;
    }
    report.push_back(entry);
  }
  write_json(out_path(out_dir, s, "distance.json"), report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

int run_greens(const Scenario& s, const std::string& out_dir) {
  RunContext ctx = build_context(s);
  auto B = build_matrix(s, ctx.family, 0);
  solver::EnergyForm form(ctx.grid, ctx.domain.mask_D, B);
  const Grid& g = ctx.grid;

  std::int64_t pole = -1;
  if (s.pole) {
    pole = g.index(g.nearest(*s.pole));
  } else {
    // Deepest interior node w.r.t. the control metric.
    std::vector<std::int64_t> rim;
    for (std::int64_t i = 0; i < g.n_nodes; ++i)
      if (ctx.domain.mask_D[static_cast<std::size_t>(i)] &&
          !form.interior_D()[static_cast<std::size_t>(i)])
        rim.push_back(i);
    auto dloc = metric::control_distance_from(ctx.family, rim, g);
    double best = -1.0;
    for (std::int64_t i = 0; i < g.n_nodes; ++i)
      if (form.interior_D()[static_cast<std::size_t>(i)] &&
          dloc.at(i) > best && std::isfinite(dloc.at(i))) {
        best = dloc.at(i);
        pole = i;
      }
  }
  auto col = potential::green_column(form, pole, s.solver_opts);
  io::dump_field(out_path(out_dir, s, "green.bin"), g, col.values.values);

  // Two-sided band against the volume-kernel integral on sampled nodes.
  std::vector<std::int64_t> rim;
  for (std::int64_t i = 0; i < g.n_nodes; ++i)
    if (ctx.domain.mask_D[static_cast<std::size_t>(i)] &&
        !form.interior_D()[static_cast<std::size_t>(i)])
      rim.push_back(i);
  auto dist_pole = metric::control_distance_from(ctx.family, {pole}, g);
  auto dist_rim = metric::control_distance_from(ctx.family, rim, g);

  std::mt19937_64 rng(s.seed + 101);
  std::vector<std::int64_t> cands;
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    if (!form.interior_D()[static_cast<std::size_t>(i)]) continue;
    double d = dist_pole.at(i);
    if (d >= 4.0 * g.h() && d <= dist_rim.at(i) / 8.0) cands.push_back(i);
  }
  std::shuffle(cands.begin(), cands.end(), rng);
  if (cands.size() > 12) cands.resize(12);
  double C_fit = 1.0;
  json pairs = json::array();
  for (std::int64_t x : cands) {
    auto dist_x = metric::control_distance_from(ctx.family, {x}, g);
    double lo = dist_x.at(pole), hi = dist_rim.at(x);
    if (!(hi > lo)) continue;
    double integral = potential::volume_kernel_integral(dist_x, lo, hi);
    double gval = col.values.values[static_cast<std::size_t>(x)];
    if (gval <= 0.0 || integral <= 0.0) continue;
    double ratio = gval / integral;
    C_fit = std::max({C_fit, ratio, 1.0 / ratio});
    pairs.push_back({{"d", lo}, {"g", gval}, {"integral", integral},
                     {"ratio", ratio}});
  }
  json report;
  report["pole"] = {g.position(pole)[0], g.position(pole)[1], g.position(pole)[2]};
  report["C_fit"] = C_fit;
  report["pairs"] = pairs;
  write_json(out_path(out_dir, s, "green.json"), report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

int run_cone(const Scenario& s, const std::string& out_dir) {
  if (!s.y) throw ConfigError("cone: scenario needs points.y");
  if (s.r_list.empty()) throw ConfigError("cone: scenario needs cone.r_list");
  RunContext ctx = build_context(s);
  if (!ctx.has_domain) throw ConfigError("cone: scenario needs shapes.omega");
  std::int64_t y_node = geometry::snap_boundary_point(ctx.domain, *s.y);
  auto dist = metric::control_distance_from(ctx.family, {y_node}, ctx.grid);
  auto cc = wiener::cone_check(ctx.domain, dist, s.r_list, s.theta_min);
  json report;
  report["theta_per_r"] = json::array();
  for (std::size_t i = 0; i < cc.radii.size(); ++i)
    report["theta_per_r"].push_back({{"r", cc.radii[i]}, {"theta", cc.theta[i]}});
  report["theta_min_seen"] = cc.theta_min_seen;
  report["theta_min_required"] = s.theta_min;
  report["pass"] = cc.pass;
  write_json(out_path(out_dir, s, "cone.json"), report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

int run_invariance(const Scenario& s, const std::string& out_dir) {
  if (!s.y) throw ConfigError("invariance: scenario needs points.y");
  if (s.matrix_cfgs.size() < 2)
    throw ConfigError("invariance: scenario needs a 'matrices' list");
  RunContext ctx = build_context(s);
  if (!ctx.has_domain) throw ConfigError("invariance: scenario needs shapes.omega");
  std::vector<fields::CoefficientMatrix> mats;
  for (std::size_t i = 0; i < s.matrix_cfgs.size(); ++i)
    mats.push_back(build_matrix(s, ctx.family, i));
  auto res = wiener::invariance_harness(ctx.domain, ctx.family, mats, *s.y,
                                        s.wiener_cfg, s.seed, s.solver_opts);
  json report;
  report["agree"] = res.agree;
  report["verdicts"] = json::array();
  for (std::size_t i = 0; i < res.verdicts.size(); ++i) {
    const auto& v = res.verdicts[i];
    report["verdicts"].push_back({{"matrix", mats[i].name()},
                                  {"verdict", wiener::to_string(v.verdict)},
                                  {"slope", v.slope},
                                  {"last_limit_est", v.last_limit_est}});
    io::write_wiener_csv(
        out_path(out_dir, s, "profile_" + std::to_string(i) + ".csv"),
        res.profiles[i]);
  }
  write_json(out_path(out_dir, s, "invariance.json"), report);
  std::cout << report.dump(2) << "\n";
  return res.agree ? 0 : 2;
}

int run_validate(const Scenario& s, const std::string& out_dir) {
  RunContext ctx = build_context(s);
  const Grid& g = ctx.grid;
  const double h = g.h();
  json rows = json::array();
  bool all_pass = true;
  auto add_row = [&](const std::string& name, bool pass, const json& detail) {
    rows.push_back({{"check", name}, {"pass", pass}, {"detail", detail}});
    all_pass = all_pass && pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << "  " << detail.dump()
              << "\n";
  };

  // X-ellipticity per configured matrix.
  for (std::size_t i = 0; i < s.matrix_cfgs.size(); ++i) {
    auto B = build_matrix(s, ctx.family, i);
    auto rep = fields::check_x_ellipticity(B, ctx.family, g, 4000, s.seed + i);
    add_row("x_ellipticity[" + B.name() + "]", rep.pass,
            {{"min_ratio", rep.min_ratio},
             {"max_ratio", rep.max_ratio},
             {"band", {B.lambda(), B.Lambda()}}});
  }

  auto B0 = build_matrix(s, ctx.family, 0);
  solver::EnergyForm form(g, ctx.domain.mask_D, B0);

  // Energy symmetry and positive semidefiniteness on random fields.
  {
    auto u = random_trig_field(g, s.seed + 11);
    auto v = random_trig_field(g, s.seed + 12);
    double e1 = form.energy_pair(u.values, v.values);
    double e2 = form.energy_pair(v.values, u.values);
    double scale = std::max({std::abs(e1), std::abs(e2), 1e-30});
    bool sym = std::abs(e1 - e2) <= 1e-12 * scale;
    double uu = form.energy(u.values);
    double nrm = 0.0;
    for (double x : u.values) nrm += x * x;
    bool psd = uu >= -1e-10 * nrm;
    add_row("energy_symmetry", sym, {{"L(u,v)", e1}, {"L(v,u)", e2}});
    add_row("energy_psd", psd, {{"energy", uu}});
  }

  // Doubling / reverse doubling at y (or the box center).
  Vec center = s.y ? *s.y : Vec{0.5 * (g.box.lo[0] + g.box.hi[0]),
                                0.5 * (g.box.lo[1] + g.box.hi[1]),
                                0.5 * (g.box.lo[2] + g.box.hi[2])};
  auto distc = metric::control_distance(ctx.family, center, g);
  std::vector<double> radii = s.radii;
  if (radii.empty()) {
    double span = 0.125 * (g.box.hi[0] - g.box.lo[0]);
    radii = {span / 4.0, span / 2.0, span};
  }
  double Q_est = 0.0;
  {
    auto vp = metric::volume_profile(distc, radii);
    bool ok = true;
    for (std::size_t i = 0; i < vp.radii.size(); ++i)
      ok = ok && vp.doubling_ratios[i] > 1.0 && !vp.truncated[i];
    Q_est = vp.Q_est;
    add_row("doubling", ok, {{"A_est", vp.A_est}, {"Q_est", vp.Q_est}});
    auto rd = metric::reverse_doubling(vp);
    add_row("reverse_doubling", !rd.violated,
            {{"beta_est", rd.beta_est}, {"mu_est", rd.mu_est}});
  }

  // Poincare ratio over random trigonometric fields.
  {
    double r = radii[0];
    auto br = metric::ball(distc, r);
    auto b2r = metric::ball(distc, 2.0 * r);
    double sup = 0.0;
    for (int t = 0; t < 20; ++t) {
      auto u = random_trig_field(g, s.seed + 300 + t);
      sup = std::max(sup, metric::poincare_ratio(ctx.family, u, br, b2r, r));
    }
    add_row("poincare", std::isfinite(sup), {{"sup_ratio", sup}, {"r", r}});
  }

  // Maximum principle and Caccioppoli need a proper Omega.
  if (ctx.has_domain && !ctx.domain.boundary_nodes.empty()) {
    Mask interior = ctx.domain.mask_Omega;
    double worst_excess = 0.0, osc_ref = 0.0;
    for (int t = 0; t < 10; ++t) {
      auto gdata = random_trig_field(g, s.seed + 700 + t);
      double gmax = -1e300, gmin = 1e300;
      for (std::int64_t i : ctx.domain.boundary_nodes) {
        gmax = std::max(gmax, gdata.values[static_cast<std::size_t>(i)]);
        gmin = std::min(gmin, gdata.values[static_cast<std::size_t>(i)]);
      }
      solver::DirichletProblem p{&form, interior, gdata};
      auto u = solve_dirichlet(p, s.solver_opts);
      double umax = -1e300;
      for (std::int64_t i = 0; i < g.n_nodes; ++i)
        if (ctx.domain.in_Omega(i))
          umax = std::max(umax, u.values[static_cast<std::size_t>(i)]);
      worst_excess = std::max(worst_excess, umax - gmax);
      osc_ref = std::max(osc_ref, gmax - gmin);
    }
    double tol = form.mp_tol(osc_ref);
    add_row("maximum_principle", worst_excess <= tol,
            {{"max_excess", worst_excess},
             {"tolerance", tol},
             {"monotone_assembly", form.monotone_assembly()}});

    // Caccioppoli on one random solution, K at d-distance >= 4h.
    auto dist_b =
        metric::control_distance_from(ctx.family, ctx.domain.boundary_nodes, g);
    double dmax = 0.0;
    for (std::int64_t i = 0; i < g.n_nodes; ++i)
      if (ctx.domain.in_Omega(i) && std::isfinite(dist_b.at(i)))
        dmax = std::max(dmax, dist_b.at(i));
    double cut = std::max(4.0 * h, 0.5 * dmax);
    std::vector<std::int64_t> K;
    for (std::int64_t i = 0; i < g.n_nodes; ++i)
      if (ctx.domain.in_Omega(i) && dist_b.at(i) >= cut) K.push_back(i);
    if (!K.empty()) {
      auto gdata = random_trig_field(g, s.seed + 900);
      solver::DirichletProblem p{&form, ctx.domain.mask_Omega, gdata};
      auto u = solve_dirichlet(p, s.solver_opts);
      double ratio = solver::caccioppoli_ratio(form, ctx.family, ctx.domain, u, K);
      add_row("caccioppoli", std::isfinite(ratio),
              {{"ratio", ratio}, {"dist_cut", cut}});
    }
  }

  // Green band: fitted two-sided constant below 10.
  {
    std::vector<std::int64_t> rim;
    for (std::int64_t i = 0; i < g.n_nodes; ++i)
      if (ctx.domain.mask_D[static_cast<std::size_t>(i)] &&
          !form.interior_D()[static_cast<std::size_t>(i)])
        rim.push_back(i);
    if (!rim.empty()) {
      auto dist_rim = metric::control_distance_from(ctx.family, rim, g);
      std::int64_t pole = -1;
      double best = -1.0;
      for (std::int64_t i = 0; i < g.n_nodes; ++i)
        if (form.interior_D()[static_cast<std::size_t>(i)] &&
            std::isfinite(dist_rim.at(i)) && dist_rim.at(i) > best) {
          best = dist_rim.at(i);
          pole = i;
        }
      auto col = potential::green_column(form, pole, s.solver_opts);
      auto dist_pole = metric::control_distance_from(ctx.family, {pole}, g);
      std::vector<std::int64_t> cands;
      for (std::int64_t i = 0; i < g.n_nodes; ++i)
        if (form.interior_D()[static_cast<std::size_t>(i)] &&
            dist_pole.at(i) >= 4.0 * h && dist_pole.at(i) <= dist_rim.at(i) / 8.0)
          cands.push_back(i);
      std::mt19937_64 rng(s.seed + 1001);
      std::shuffle(cands.begin(), cands.end(), rng);
      if (cands.size() > 10) cands.resize(10);
      double C_fit = 1.0;
      for (std::int64_t x : cands) {
        auto dist_x = metric::control_distance_from(ctx.family, {x}, g);
        double lo = dist_x.at(pole), hi = dist_rim.at(x);
        if (!(hi > lo)) continue;
        double integral = potential::volume_kernel_integral(dist_x, lo, hi);
        double gval = col.values.values[static_cast<std::size_t>(x)];
        if (gval <= 0.0 || integral <= 0.0) continue;
        C_fit = std::max({C_fit, gval / integral, integral / gval});
      }
      add_row("green_band", C_fit < 10.0 && !cands.empty(),
              {{"C_fit", C_fit}, {"pairs", cands.size()}});
    }
  }

  // Sobolev spot check, meaningful only when Q_est exceeds 2.
  if (Q_est > 2.05) {
    double p = 2.0 * Q_est / (Q_est - 2.0);
    double hN = std::pow(h, g.dim());
    double C_fit = 0.0;
    for (int t = 0; t < 10; ++t) {
      auto u = random_trig_field(g, s.seed + 1200 + t);
      for (std::int64_t i = 0; i < g.n_nodes; ++i)
        if (!form.interior_D()[static_cast<std::size_t>(i)])
          u.values[static_cast<std::size_t>(i)] = 0.0;
      double lp = 0.0, xg2 = 0.0;
      for (std::int64_t i = 0; i < g.n_nodes; ++i) {
        if (!ctx.domain.mask_D[static_cast<std::size_t>(i)]) continue;
        lp += std::pow(std::abs(u.values[static_cast<std::size_t>(i)]), p) * hN;
        double xg = metric::x_gradient_norm(ctx.family, u, i);
        xg2 += xg * xg * hN;
      }
      if (xg2 > 0.0) C_fit = std::max(C_fit, std::pow(lp, 1.0 / p) / std::sqrt(xg2));
    }
    add_row("sobolev_spot", std::isfinite(C_fit) && C_fit > 0.0,
            {{"C_fit", C_fit}, {"exponent", p}});
  }

  json report;
  report["checks"] = rows;
  report["all_pass"] = all_pass;
  write_json(out_path(out_dir, s, "validate.json"), report);
  std::cout << (all_pass ? "all checks passed" : "some checks FAILED") << "\n";
  return all_pass ? 0 : 2;
}

}  // namespace xe::scenario
