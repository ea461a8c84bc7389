// Command-line driver: convergence studies, scenario runs, demo data.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fpsi/errors.hpp"
#include "fpsi/io.hpp"
#include "fpsi/mms.hpp"
#include "fpsi/scenario.hpp"

namespace {

void print_report(const fpsi::ErrorReport& rep) {
  std::printf("%5s %8s %9s %8s", "level", "h", "tau", "dofs");
  for (int v = 0; v < fpsi::kErrVars; ++v) std::printf(" %10s %5s", fpsi::kErrNames[v], "rate");
  std::printf("\n");
  for (size_t r = 0; r < rep.rows.size(); ++r) {
    const auto& row = rep.rows[r];
    std::printf("%5d %8.4f %9.5f %8ld", row.level, row.h, row.tau, row.dofs);
    for (int v = 0; v < fpsi::kErrVars; ++v) {
      const double rate = rep.rate(static_cast<int>(r), v);
      std::printf(" %10.3e %5.2f", row.err[v], std::isnan(rate) ? 0.0 : rate);
    }
    std::printf("\n");
  }
}

int run_config(const std::string& path, int max_steps_override) {
  fpsi::ScenarioConfig cfg = fpsi::load_scenario_config(path);
  if (max_steps_override > 0) cfg.max_steps = max_steps_override;
  const fpsi::ScenarioResult r = fpsi::run_scenario(cfg);
  std::printf("%s: %d steps to t = %g\n", cfg.name.c_str(), r.steps_completed,
              r.final_time);
  std::printf("  energy %.6e, max |y_s| %.4e\n", r.final_energy, r.max_displacement);
  std::printf("  max conservation residual %.3e, max kinematic residual %.3e\n",
              r.max_conservation, r.max_kinematic);
  return 0;
}

void write_demo_spe10(const std::string& dir) {
  // Reservoir-format sample data: one layer, smooth heterogeneous pattern.
  const std::string phi_path = dir + "/demo_phi.dat";
  const std::string perm_path = dir + "/demo_perm.dat";
  std::ofstream phi(phi_path), perm(perm_path);
  if (!phi.good() || !perm.good())
    fpsi::fail(fpsi::ErrorCode::Io, "cannot write demo data under " + dir);
  for (int j = 0; j < 220; ++j)
    for (int i = 0; i < 60; ++i)
      phi << 0.15 + 0.15 * std::sin(0.3 * i) * std::cos(0.15 * j) << "\n";
  for (int comp = 0; comp < 3; ++comp)
    for (int j = 0; j < 220; ++j)
      for (int i = 0; i < 60; ++i)
        perm << 50.0 + 45.0 * std::sin(0.21 * i + 0.4 * j) << "\n";
  std::printf("wrote %s and %s\n", phi_path.c_str(), perm_path.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled free-flow / poroelastic interface solver"};
  app.require_subcommand(1);

  int levels = 4;
  std::string out_space = "convergence_space.csv";
  auto* sp = app.add_subcommand("convergence-space",
                                "Spatial verification study on the stacked squares");
  sp->add_option("--levels", levels, "refinement levels (1..6)")->default_val(4);
  sp->add_option("--out", out_space, "output CSV path");

  double tau0 = 0.5;
  int halvings = 5;
  int mesh_level = 2;
  std::string out_time = "convergence_time.csv";
  auto* tm = app.add_subcommand("convergence-time",
                                "Temporal verification study on a fixed mesh");
  tm->add_option("--tau0", tau0, "coarsest time step")->default_val(0.5);
  tm->add_option("--halvings", halvings, "number of halvings")->default_val(5);
  tm->add_option("--mesh-level", mesh_level, "mesh refinement level")->default_val(2);
  tm->add_option("--out", out_time, "output CSV path");

  std::string config_path;
  int max_steps = 0;
  auto add_config_cmd = [&](const char* name, const char* desc) {
    auto* cmd = app.add_subcommand(name, desc);
    cmd->add_option("--config", config_path, "JSON scenario config")->required();
    cmd->add_option("--max-steps", max_steps, "truncate the run after N steps");
    return cmd;
  };
  auto* fr = add_config_cmd("fracture", "Subsurface fracture injection scenario");
  auto* ch = add_config_cmd("channel", "Channel filtration scenario with mesh motion");
  auto* rn = add_config_cmd("run", "Generic config-driven scenario");

  std::string demo_dir = ".";
  auto* dd = app.add_subcommand("make-demo-data",
                                "Write synthetic reservoir-format sample data");
  dd->add_option("--out", demo_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (sp->parsed()) {
      fpsi::TransientMonitor monitor;
      const fpsi::ErrorReport rep = fpsi::spatial_convergence_study(levels, &monitor);
      print_report(rep);
      fpsi::write_error_report_csv(rep, out_space);
      std::printf("wrote %s (max conservation residual %.2e)\n", out_space.c_str(),
                  monitor.max_conservation);
      return 0;
    }
    if (tm->parsed()) {
      fpsi::TransientMonitor monitor;
      const fpsi::ErrorReport rep =
          fpsi::temporal_convergence_study(mesh_level, tau0, halvings, &monitor);
      print_report(rep);
      fpsi::write_error_report_csv(rep, out_time);
      std::printf("wrote %s (max conservation residual %.2e)\n", out_time.c_str(),
                  monitor.max_conservation);
      return 0;
    }
    if (fr->parsed() || ch->parsed() || rn->parsed())
      return run_config(config_path, max_steps);
    if (dd->parsed()) {
      write_demo_spe10(demo_dir);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
