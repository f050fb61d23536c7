// xell: scenario-driven driver for the X-elliptic potential toolkit.
//
// Subcommands map one-to-one onto the module pipelines:
//   classify | capacity | distance | greens | cone | invariance | validate
// Each takes a scenario JSON file and writes CSV/JSON/binary reports.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xe/scenario.hpp"

namespace {

struct CommonArgs {
  std::string scenario_path;
  std::string out_dir = ".";
  int threads = 0;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--scenario", args.scenario_path, "scenario JSON file")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory (default: .)");
  cmd->add_option("--threads", args.threads, "worker threads (0: default)");
  cmd->add_option("--override", args.overrides,
                  "patch scenario values, key.path=value (repeatable)");
}

int dispatch(const std::string& name, const CommonArgs& args) {
  xe::scenario::Scenario s =
      xe::scenario::load_scenario(args.scenario_path, args.overrides);
  if (args.threads > 0) {
    s.threads = args.threads;
    s.solver_opts.threads = args.threads;
  }
  if (name == "classify") return xe::scenario::run_classify(s, args.out_dir);
  if (name == "capacity") return xe::scenario::run_capacity(s, args.out_dir);
  if (name == "distance") return xe::scenario::run_distance(s, args.out_dir);
  if (name == "greens") return xe::scenario::run_greens(s, args.out_dir);
  if (name == "cone") return xe::scenario::run_cone(s, args.out_dir);
  if (name == "invariance") return xe::scenario::run_invariance(s, args.out_dir);
  if (name == "validate") return xe::scenario::run_validate(s, args.out_dir);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"X-elliptic potential toolkit"};
  app.require_subcommand(1);

  const std::vector<std::string> names = {"classify",   "capacity", "distance",
                                          "greens",     "cone",     "invariance",
                                          "validate"};
  const std::vector<std::string> descs = {
      "Wiener-type boundary point classification",
      "variational capacity of an obstacle",
      "control-distance fields and ball volume profiles",
      "Green function column and two-sided volume bound",
      "volume-density cone criterion",
      "verdict agreement across coefficient matrices",
      "hypothesis validation battery"};

  std::vector<CommonArgs> args(names.size());
  for (std::size_t i = 0; i < names.size(); ++i)
    add_common(app.add_subcommand(names[i], descs[i]), args[i]);

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!app.got_subcommand(names[i])) continue;
    try {
      return dispatch(names[i], args[i]);
    } catch (const xe::ConfigError& e) {
      std::cerr << "configuration error: " << e.what() << "\n";
      return 1;
    } catch (const xe::GeometryError& e) {
      std::cerr << "geometry error: " << e.what() << "\n";
      return 1;
    } catch (const xe::NumericalError& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }
  return 1;
}
