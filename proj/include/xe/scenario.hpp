#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "xe/fields.hpp"
#include "xe/geometry.hpp"
#include "xe/grid.hpp"
#include "xe/solver.hpp"
#include "xe/wiener.hpp"

namespace xe::scenario {

// Declarative run description, one JSON file per run. See the README for
// the schema; --override key=value patches dotted paths before validation.
struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  int threads = 0;
  std::int64_t cell_budget = std::int64_t{1} << 24;

  BoundingBox box;
  geometry::ShapePtr shape_D;
  geometry::ShapePtr shape_Omega;  // optional for capacity/distance runs
  geometry::ShapePtr obstacle;     // capacity subcommand

  nlohmann::json family_cfg;
  std::vector<nlohmann::json> matrix_cfgs;

  std::optional<Vec> y;
  std::optional<Vec> pole;
  std::vector<Vec> sources;
  std::vector<double> radii;    // distance / greens band radii
  std::vector<double> r_list;   // cone radii
  double theta_min = 0.1;

  wiener::WienerConfig wiener_cfg;
  solver::SolverOptions solver_opts;
  std::optional<double> reference;  // analytic value printed next to results

  nlohmann::json raw;  // echoed into reports
};

Scenario load_scenario(const std::string& path,
                       const std::vector<std::string>& overrides = {});
Scenario parse_scenario(nlohmann::json j);

geometry::ShapePtr parse_shape(const nlohmann::json& j);
fields::FieldFamily build_family(const Scenario& s);
fields::CoefficientMatrix build_matrix(const Scenario& s,
                                       const fields::FieldFamily& family,
                                       std::size_t index);

struct RunContext {
  Grid grid;
  geometry::GridDomain domain;       // valid when shape_Omega present
  bool has_domain = false;
  fields::FieldFamily family = fields::FieldFamily::euclidean(2);
};

RunContext build_context(const Scenario& s);

// Subcommand pipelines; each writes its reports under out_dir and returns
// a process exit code (0 ok, 1 configuration error, 2 numerical failure).
int run_classify(const Scenario& s, const std::string& out_dir);
int run_capacity(const Scenario& s, const std::string& out_dir);
int run_distance(const Scenario& s, const std::string& out_dir);
int run_greens(const Scenario& s, const std::string& out_dir);
int run_cone(const Scenario& s, const std::string& out_dir);
int run_invariance(const Scenario& s, const std::string& out_dir);
int run_validate(const Scenario& s, const std::string& out_dir);

nlohmann::json verdict_to_json(const wiener::RegularityVerdict& v,
                               const wiener::CapacityProfile& prof,
                               const Scenario& s);

}  // namespace xe::scenario
