// Command line front end: certify scenarios, run closed-loop simulations,
// sweep envelope parameters, and reproduce the built-in benchmark.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>

#include "pwamrac/pwamrac.hpp"

namespace fs = std::filesystem;
using namespace pwamrac;

namespace {

struct SimulateFlags {
  std::string out_dir;
  bool force = false;
  bool strict_dwell = false;
  bool oracle_v = false;
  bool dump_gains = false;
  double dt = 0.0;      // 0: keep scenario value
  double t_end = -1.0;  // <0: keep scenario value
};

void add_simulate_flags(CLI::App* cmd, SimulateFlags& f) {
  cmd->add_option("--out", f.out_dir, "directory for trajectory.csv, events.json, summary.json");
  cmd->add_flag("--force", f.force, "simulate even when certificate conditions fail");
  cmd->add_flag("--strict-dwell", f.strict_dwell, "abort on a switch faster than tau_d");
  cmd->add_flag("--oracle-v", f.oracle_v, "track the Lyapunov diagnostic (needs ideal gains)");
  cmd->add_flag("--dump-gains", f.dump_gains, "append per-mode gain columns to the CSV");
  cmd->add_option("--dt", f.dt, "integration step override");
  cmd->add_option("--t-end", f.t_end, "horizon override");
}

int run_certify(const Scenario& sc) {
  const CertifyOutcome outcome = certify_scenario(sc);
  std::cout << certificate_json(outcome).dump(2) << "\n";
  return outcome.verdict.pass ? 0 : 1;
}

int run_simulate(Scenario sc, const SimulateFlags& f) {
  const CertifyOutcome outcome = certify_scenario(sc);
  if (!outcome.verdict.pass) {
    std::cerr << "certificate conditions failed:\n";
    for (const auto& c : outcome.verdict.conditions)
      if (!c.pass) std::cerr << "  " << c.name << " (margin " << c.margin << ")\n";
    if (!f.force) {
      std::cerr << "refusing to simulate; pass --force to override\n";
      return 1;
    }
  }
  for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";

  SimSetup setup = make_setup(sc, outcome);
  if (f.dt > 0.0) setup.options.dt = f.dt;
  if (f.t_end >= 0.0) setup.options.t_end = f.t_end;
  setup.options.strict_dwell = f.strict_dwell;
  setup.options.oracle_v = f.oracle_v;
  setup.options.log_gains = f.dump_gains;

  Simulator sim(std::move(setup));
  std::string abort_reason;
  try {
    sim.run();
  } catch (const Error& e) {
    abort_reason = e.what();
  }

  const TrajectoryLog& log = sim.log();
  nlohmann::json summary = summary_json(log.summary);
  summary["final_gains"] = gains_json(log.final_gains);
  if (!abort_reason.empty()) summary["aborted"] = abort_reason;

  if (!f.out_dir.empty()) {
    fs::create_directories(f.out_dir);
    const fs::path dir(f.out_dir);
    const PwaPlant plant = sc.make_plant();
    write_trajectory_csv(log, plant.n(), plant.p(), (dir / "trajectory.csv").string());
    write_json(events_json(log.events), (dir / "events.json").string());
    write_json(summary, (dir / "summary.json").string());
    write_json(certificate_json(outcome), (dir / "certificate.json").string());
  }
  std::cout << summary.dump(2) << "\n";

  if (!abort_reason.empty()) {
    std::cerr << "aborted: " << abort_reason << "\n";
    return 2;
  }
  return log.summary.monitors_pass ? 0 : 1;
}

int run_sweep_cmd(const Scenario& sc, const std::string& grid_spec, const std::string& out_dir) {
  const SweepGrid grid = parse_grid(grid_spec);
  const std::vector<SweepRow> rows = run_sweep(sc, grid);
  std::cout << sweep_table(rows, grid);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_json(sweep_json(rows, grid), (fs::path(out_dir) / "sweep.json").string());
  }
  return 0;  // per-row failures are data, not a sweep failure
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive tracking control of piecewise affine systems"};
  app.require_subcommand(1);

  std::string scenario_path;
  SimulateFlags sim_flags;
  std::string grid_spec, sweep_out;
  std::string demo_action = "simulate";
  std::string emit_path;

  auto* certify = app.add_subcommand("certify", "check the stability certificate");
  certify->add_option("scenario", scenario_path, "scenario JSON file")->required();

  auto* simulate = app.add_subcommand("simulate", "certify, then run the closed loop");
  simulate->add_option("scenario", scenario_path, "scenario JSON file")->required();
  add_simulate_flags(simulate, sim_flags);

  auto* sweep = app.add_subcommand("sweep", "grid of certify+simulate runs");
  sweep->add_option("scenario", scenario_path, "scenario JSON file")->required();
  sweep->add_option("--grid", grid_spec, "e.g. \"h=0.05,0.12,0.24;g=0.01\"")->required();
  sweep->add_option("--out", sweep_out, "directory for sweep.json");

  auto* demo = app.add_subcommand("paper-example", "built-in two-mass benchmark");
  demo->add_option("action", demo_action, "certify | simulate")
      ->check(CLI::IsMember({"certify", "simulate"}));
  demo->add_option("--emit-scenario", emit_path, "write the scenario JSON and exit");
  add_simulate_flags(demo, sim_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the help or error text
    return code == 0 ? 0 : 2;      // usage problems exit 2, --help exits 0
  }

  try {
    if (certify->parsed()) return run_certify(load_scenario(scenario_path));
    if (simulate->parsed()) return run_simulate(load_scenario(scenario_path), sim_flags);
    if (sweep->parsed()) return run_sweep_cmd(load_scenario(scenario_path), grid_spec, sweep_out);
    if (demo->parsed()) {
      const Scenario sc = mass_spring_scenario();
      if (!emit_path.empty()) {
        save_scenario(sc, emit_path);
        return 0;
      }
      return demo_action == "certify" ? run_certify(sc) : run_simulate(sc, sim_flags);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
