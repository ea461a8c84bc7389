#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpsi/system.hpp"

namespace fpsi {

// Heterogeneous material fields ingested from reservoir data and projected
// onto P1 on the porous mesh.
struct HeterogeneousFields {
  NodalField phi;
  NodalField kappa;
  NodalField youngs;     // E(x)
  NodalField lambda_p;   // E nu / ((1+nu)(1-2nu))
  NodalField mu_p;       // E / (2(1+nu))
  double nu = 0.2;

  void validate(const Mesh2D& mesh) const;
};

struct Spe10Options {
  double phi_clamp = 0.01;  // porosity clamped to [clamp, 1-clamp]
  // Permeability handling: affine rescale into [kappa_min, kappa_max] when
  // given, otherwise plain unit conversion (millidarcy to m^2) with a
  // positive floor.
  std::optional<std::pair<double, double>> kappa_range;
  double kappa_unit_scale = 9.869233e-16;  // m^2 per millidarcy
  double nu = 0.2;
  double youngs_scale = 1.0e7;   // E(x) = scale * (1 - 2 phi)^exponent
  double youngs_exponent = 2.1;
};

// Reads the 60x220x85-cell benchmark layout (x fastest, then y, then z;
// permeability file stores kx, ky, kz blocks and kx is used), extracts the
// 1-based `layer`, maps it onto `target_box` by nearest-cell lookup and
// L2-projects onto P1 on the porous mesh.
HeterogeneousFields load_spe10_layer(const std::string& phi_file,
                                     const std::string& perm_file, int layer,
                                     const Box& target_box, const Mesh2D& mesh,
                                     const Spe10Options& opts = {});

// Componentwise P1 harmonic extension of an interface displacement into the
// Stokes subdomain: zero on the inlet marker, natural on the remaining walls.
// Returns per-vertex displacements (zero on porous-only vertices).
std::vector<Vec2> harmonic_extension(const Mesh2D& mesh,
                                     const std::map<int, Vec2>& interface_values,
                                     int inlet_marker);

// Structured fracture mesh: a rectangle with an embedded channel column
// tagged as the Stokes region; channel bottom edges are marked INLET.
Mesh2D build_fracture_mesh(const Box& domain, double channel_x0, double channel_x1,
                           double channel_height, int nx, int ny);

// --- Config-driven scenario runs -------------------------------------------

struct BCConfig {
  std::string marker;            // marker name
  std::string field;             // "u_f" | "u_r" | "y_s"
  std::string type;              // "essential" | "traction"
  std::string components = "both";  // "both" | "x" | "y" | "normal" | "tangential"
  Vec2 value;                    // constant vector (essential/traction)
  double scalar_value = 0.0;     // single-component essential value
  std::string profile = "constant";  // "constant" | "sin_t" | "sin2_pi_t"
  double amplitude = 0.0;        // normal-pressure traction amplitude
  bool normal_pressure = false;  // traction = -p(t) n
};

struct OutputRequest {
  std::string kind;  // "vtk_fields" | "csv_timeseries" | "csv_errors"
  int every = 1;     // cadence in steps; final state is always written
  std::string prefix;
};

struct ScenarioConfig {
  std::string name = "run";
  // Mesh source: exactly one of these.
  std::string mesh_file;
  std::optional<Box> stokes_box, porous_box;
  int nx = 8, ny = 8;
  std::optional<Box> fracture_domain;
  double channel_x0 = 0, channel_x1 = 0, channel_height = 0;

  MaterialFields::Constants materials;
  std::optional<double> c0;  // storage coefficient; K = (1-phi)^2/c0

  // SPE10 ingestion (optional).
  std::string spe10_phi_file, spe10_perm_file;
  int spe10_layer = 0;
  Spe10Options spe10;

  std::vector<BCConfig> bcs;

  double T = 1.0;
  double tau = 0.1;
  int max_steps = 0;  // 0 = run to T

  bool mesh_motion = false;
  std::string motion_inlet_marker = "WALL_TOP";

  std::vector<OutputRequest> outputs;
};

ScenarioConfig load_scenario_config(const std::string& path);

struct ScenarioResult {
  int steps_completed = 0;
  double final_time = 0.0;
  double max_conservation = 0.0;
  double max_kinematic = 0.0;
  double final_energy = 0.0;
  double max_displacement = 0.0;  // max |y_s| nodal over the run
  TransientState final_state;
  std::vector<double> energy_history;
};

ScenarioResult run_scenario(const ScenarioConfig& config);

}  // namespace fpsi
