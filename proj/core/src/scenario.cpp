#include "fpsi/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fpsi/errors.hpp"
#include "fpsi/io.hpp"

namespace fpsi {

using nlohmann::json;

void HeterogeneousFields::validate(const Mesh2D& mesh) const {
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (!mesh.vertex_in_subdomain(v, CellTag::Porous)) continue;
    const double p = phi.values()[v];
    require(p >= 0.01 - 1e-12 && p <= 0.99 + 1e-12, ErrorCode::Argument,
            "porosity outside the clamp range at vertex " + std::to_string(v));
    require(kappa.values()[v] > 0.0, ErrorCode::Argument,
            "nonpositive permeability at vertex " + std::to_string(v));
    require(youngs.values()[v] > 0.0, ErrorCode::Argument,
            "nonpositive Young modulus at vertex " + std::to_string(v));
    const double E = youngs.values()[v];
    const double lp = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    const double mp = E / (2.0 * (1.0 + nu));
    require(std::abs(lp - lambda_p.values()[v]) <= 1e-12 * std::max(1.0, lp) &&
                std::abs(mp - mu_p.values()[v]) <= 1e-12 * std::max(1.0, mp),
            ErrorCode::Argument, "Lame fields inconsistent with E(x) and nu");
  }
}

namespace {

constexpr int kSpeNx = 60, kSpeNy = 220, kSpeNz = 85;

std::vector<double> read_spe10_slab(const std::string& path, long offset, long count) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Format, "cannot open data file " + path);
  std::vector<double> slab(count);
  double v = 0.0;
  for (long i = 0; i < offset; ++i)
    require(static_cast<bool>(in >> v), ErrorCode::Format, "data file too short: " + path);
  for (long i = 0; i < count; ++i)
    require(static_cast<bool>(in >> slab[i]), ErrorCode::Format,
            "data file too short: " + path);
  return slab;
}

// L2-projection of a piecewise-constant slab field onto P1 on the porous
// mesh; vertices outside the porous subdomain get the raw cell value.
NodalField project_slab(const Mesh2D& mesh, const std::vector<double>& slab,
                        const Box& box) {
  auto raw = [&](Vec2 x) {
    int i = static_cast<int>((x.x - box.x0) / (box.x1 - box.x0) * kSpeNx);
    int j = static_cast<int>((x.y - box.y0) / (box.y1 - box.y0) * kSpeNy);
    i = std::clamp(i, 0, kSpeNx - 1);
    j = std::clamp(j, 0, kSpeNy - 1);
    return slab[j * kSpeNx + i];
  };

  FunctionSpace p1(mesh, Subdomain::Porous, Family::P1, 1);
  const SparseMat mass = assemble_weighted_mass(p1, p1, NodalField::constant(mesh, 1.0),
                                                kVolumeOrderConstant);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p1.dim());
  const auto& rule = triangle_rule(kVolumeOrderConstant);
  double N[3];
  for (size_t c = 0; c < p1.cells().size(); ++c) {
    const int t = p1.cells()[c];
    const auto& tv = mesh.triangles()[t];
    const Vec2 a = mesh.vertices()[tv[0]], b = mesh.vertices()[tv[1]],
               d = mesh.vertices()[tv[2]];
    const double detj = cross(b - a, d - a);
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const auto& p = rule.points[q];
      const Vec2 x = a * p.l0 + b * p.l1 + d * p.l2;
      FunctionSpace::shape_tri(Family::P1, p.l1, p.l2, N);
      const double w = rule.weights[q] * detj * raw(x);
      for (int i = 0; i < 3; ++i) rhs[p1.cell_dof(static_cast<int>(c), i, 0)] += w * N[i];
    }
  }
  const Eigen::VectorXd coeffs = factorize(mass).solve(rhs);

  std::vector<double> vertex_values(mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const int n = p1.vertex_node(v);
    vertex_values[v] = n >= 0 ? coeffs[n] : raw(mesh.vertices()[v]);
  }
  return NodalField(mesh, std::move(vertex_values));
}

}  // namespace

HeterogeneousFields load_spe10_layer(const std::string& phi_file,
                                     const std::string& perm_file, int layer,
                                     const Box& target_box, const Mesh2D& mesh,
                                     const Spe10Options& opts) {
  require(layer >= 1 && layer <= kSpeNz, ErrorCode::Argument,
          "layer must be in [1," + std::to_string(kSpeNz) + "], got " +
              std::to_string(layer));
  const long slab_size = static_cast<long>(kSpeNx) * kSpeNy;
  const long offset = static_cast<long>(layer - 1) * slab_size;

  std::vector<double> phi_slab = read_spe10_slab(phi_file, offset, slab_size);
  // kx block leads the permeability file; ky and kz blocks are unused.
  std::vector<double> kx_slab = read_spe10_slab(perm_file, offset, slab_size);

  // Permeability rescale: affine onto a configured range, or unit conversion
  // from millidarcy with a positive floor.
  if (opts.kappa_range) {
    const auto [kmin, kmax] = *opts.kappa_range;
    require(kmin > 0.0 && kmax > kmin, ErrorCode::Argument, "bad kappa range");
    const double rmin = *std::min_element(kx_slab.begin(), kx_slab.end());
    const double rmax = *std::max_element(kx_slab.begin(), kx_slab.end());
    for (double& v : kx_slab)
      v = rmax > rmin ? kmin + (v - rmin) / (rmax - rmin) * (kmax - kmin)
                      : 0.5 * (kmin + kmax);
  } else {
    for (double& v : kx_slab) v = std::max(v * opts.kappa_unit_scale, 1e-30);
  }

  HeterogeneousFields f;
  f.nu = opts.nu;
  f.phi = project_slab(mesh, phi_slab, target_box);
  f.kappa = project_slab(mesh, kx_slab, target_box);
  for (double& v : f.phi.values()) v = std::clamp(v, opts.phi_clamp, 1.0 - opts.phi_clamp);
  for (double& v : f.kappa.values()) v = std::max(v, 1e-30);

  std::vector<double> E(mesh.vertex_count()), lp(mesh.vertex_count()),
      mp(mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    // Base floored so the law stays positive for porosities above 1/2.
    const double base = std::max(1.0 - 2.0 * f.phi.values()[v], 1e-3);
    E[v] = opts.youngs_scale * std::pow(base, opts.youngs_exponent);
    lp[v] = E[v] * opts.nu / ((1.0 + opts.nu) * (1.0 - 2.0 * opts.nu));
    mp[v] = E[v] / (2.0 * (1.0 + opts.nu));
  }
  f.youngs = NodalField(mesh, std::move(E));
  f.lambda_p = NodalField(mesh, std::move(lp));
  f.mu_p = NodalField(mesh, std::move(mp));
  f.validate(mesh);
  return f;
}

std::vector<Vec2> harmonic_extension(const Mesh2D& mesh,
                                     const std::map<int, Vec2>& interface_values,
                                     int inlet_marker) {
  FunctionSpace space(mesh, Subdomain::Stokes, Family::P1, 1);
  const SparseMat K = assemble_component_laplacian(space, 2);

  std::vector<int> constrained;
  std::vector<std::pair<int, Vec2>> values;
  std::vector<char> is_iface(space.dim(), 0);
  for (const auto& [v, d] : interface_values) {
    const int n = space.vertex_node(v);
    require(n >= 0, ErrorCode::Argument,
            "interface vertex " + std::to_string(v) + " not in the Stokes subdomain");
    constrained.push_back(n);
    values.emplace_back(n, d);
    is_iface[n] = 1;
  }
  for (const auto& be : mesh.boundary_edges()) {
    if (be.marker != inlet_marker) continue;
    for (int n : space.nodes_on_edge(be)) {
      if (is_iface[n]) {
        // A node on both the interface and the inlet must carry zero data.
        for (const auto& [nn, d] : values)
          if (nn == n)
            require(d.x == 0.0 && d.y == 0.0, ErrorCode::BcConflict,
                    "node on both inlet and interface with nonzero displacement");
        continue;
      }
      constrained.push_back(n);
      values.emplace_back(n, Vec2{0.0, 0.0});
    }
  }

  const ConstrainedOperator op = constrain_operator(K, constrained);
  const Factorization lu(op.matrix);
  std::vector<Vec2> out(mesh.vertex_count());
  for (int comp = 0; comp < 2; ++comp) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(space.dim());
    std::vector<std::pair<int, double>> vals;
    vals.reserve(values.size());
    for (const auto& [n, d] : values) vals.emplace_back(n, comp == 0 ? d.x : d.y);
    apply_constraints_rhs(op, vals, rhs);
    const Eigen::VectorXd sol = lu.solve(rhs);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      const int n = space.vertex_node(v);
      if (n < 0) continue;
      if (comp == 0)
        out[v].x = sol[n];
      else
        out[v].y = sol[n];
    }
  }
  return out;
}

Mesh2D build_fracture_mesh(const Box& domain, double channel_x0, double channel_x1,
                           double channel_height, int nx, int ny) {
  require(nx >= 1 && ny >= 1, ErrorCode::Argument, "nx and ny must be >= 1");
  require(channel_x1 > channel_x0 && channel_height > domain.y0, ErrorCode::Geometry,
          "empty fracture channel");
  std::vector<Vec2> verts;
  std::vector<std::array<int, 3>> tris;
  std::vector<CellTag> tags;
  auto px = [&](int i) { return domain.x0 + (domain.x1 - domain.x0) * i / nx; };
  auto py = [&](int j) { return domain.y0 + (domain.y1 - domain.y0) * j / ny; };
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) verts.push_back({px(i), py(j)});
  bool any_stokes = false;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Vec2 center{0.5 * (px(i) + px(i + 1)), 0.5 * (py(j) + py(j + 1))};
      const bool in_channel = center.x > channel_x0 && center.x < channel_x1 &&
                              center.y < channel_height;
      any_stokes = any_stokes || in_channel;
      const CellTag tag = in_channel ? CellTag::Stokes : CellTag::Porous;
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1),
                v11 = vid(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        tris.push_back({v00, v10, v11});
        tris.push_back({v00, v11, v01});
      } else {
        tris.push_back({v00, v10, v01});
        tris.push_back({v10, v11, v01});
      }
      tags.push_back(tag);
      tags.push_back(tag);
    }
  }
  require(any_stokes, ErrorCode::Geometry, "channel does not cover any cell");

  Mesh2D tmp(verts, tris, tags, {});
  std::vector<BoundaryEdge> bedges;
  auto close = [](double a, double b) { return std::abs(a - b) < 1e-12; };
  for (size_t e = 0; e < tmp.edge_vertices().size(); ++e) {
    const int va = tmp.edge_vertices()[e][0];
    const int vb = tmp.edge_vertices()[e][1];
    const auto adj = tmp.edge_triangles()[e];
    if (adj[1] >= 0) {
      if (tmp.cell_tags()[adj[0]] != tmp.cell_tags()[adj[1]])
        bedges.push_back({va, vb, marker::kInterface});
      continue;
    }
    const Vec2 a = verts[va], b = verts[vb];
    int m = -1;
    if (close(a.y, domain.y0) && close(b.y, domain.y0)) {
      // Channel mouth on the bottom boundary is the injection inlet.
      const bool stokes_side = tmp.cell_tags()[adj[0]] == CellTag::Stokes;
      m = stokes_side ? marker::kInlet : marker::kWallBottom;
    } else if (close(a.x, domain.x0) && close(b.x, domain.x0)) {
      m = marker::kWallLeft;
    } else if (close(a.x, domain.x1) && close(b.x, domain.x1)) {
      m = marker::kWallRight;
    } else if (close(a.y, domain.y1) && close(b.y, domain.y1)) {
      m = marker::kWallTop;
    }
    require(m >= 0, ErrorCode::Geometry, "boundary edge not on the domain boundary");
    bedges.push_back({va, vb, m});
  }
  return Mesh2D(std::move(verts), std::move(tris), std::move(tags), std::move(bedges));
}

// ---------------------------------------------------------------------------

namespace {

double profile_value(const std::string& profile, double t) {
  if (profile == "constant") return 1.0;
  if (profile == "sin_t") return std::sin(t);
  if (profile == "sin2_pi_t") {
    const double s = std::sin(3.14159265358979323846 * t);
    return s * s;
  }
  fail(ErrorCode::Argument, "unknown time profile '" + profile + "'");
}

Field parse_field(const std::string& s) {
  if (s == "u_f") return kUf;
  if (s == "u_r") return kUr;
  if (s == "y_s") return kYs;
  fail(ErrorCode::Argument, "boundary conditions support u_f, u_r, y_s; got " + s);
}

// Outward normal axis and sign of a marked straight boundary piece, taken
// from the first matching edge, relative to the field's subdomain.
std::pair<int, double> marker_normal_axis(const Mesh2D& mesh, int m, CellTag tag) {
  for (const auto& be : mesh.boundary_edges()) {
    if (be.marker != m) continue;
    const int eid = mesh.edge_index(be.v0, be.v1);
    int tri = -1;
    for (int t : mesh.edge_triangles()[eid])
      if (t >= 0 && mesh.cell_tags()[t] == tag) tri = t;
    if (tri < 0) continue;
    const Vec2 p0 = mesh.vertices()[be.v0], p1 = mesh.vertices()[be.v1];
    Vec2 n = rot90(p1 - p0) / norm(p1 - p0);
    if (dot((p0 + p1) * 0.5 - mesh.triangle_centroid(tri), n) < 0.0) n = n * (-1.0);
    const int axis = std::abs(n.x) >= std::abs(n.y) ? 0 : 1;
    return {axis, axis == 0 ? (n.x >= 0 ? 1.0 : -1.0) : (n.y >= 0 ? 1.0 : -1.0)};
  }
  fail(ErrorCode::Argument, "marker " + marker::name(m) + " has no edge on the subdomain");
}

struct ScenarioProblem {
  std::vector<FunctionSpace> storage;
  Spaces spaces;
  MaterialFields materials;
  std::vector<GlobalBC> bcs;
  std::vector<BCConfig> tractions;

  TimeStepper::LoadFn load_fn() const {
    const Spaces sp = spaces;
    const MaterialFields mats = materials;
    const std::vector<BCConfig> tr = tractions;
    return [sp, mats, tr](double t) {
      Eigen::VectorXd load = assemble_load(sp, mats, {}, nullptr, t);
      for (const auto& bc : tr) {
        const int m = marker::parse(bc.marker);
        const double scale = profile_value(bc.profile, t);
        std::function<Vec2(Vec2, Vec2, double)> g;
        if (bc.normal_pressure) {
          const double amp = bc.amplitude;
          g = [amp, scale](Vec2, Vec2 n, double) { return n * (-amp * scale); };
        } else {
          const Vec2 val = bc.value;
          g = [val, scale](Vec2, Vec2, double) { return val * scale; };
        }
        add_traction_load(load, sp, parse_field(bc.field), {m}, g, t);
      }
      return load;
    };
  }
};

MaterialFields build_materials(const Mesh2D& mesh, const ScenarioConfig& cfg,
                               const HeterogeneousFields* het) {
  if (!het) {
    MaterialFields::Constants c = cfg.materials;
    if (cfg.c0) c.K_bulk = (1.0 - c.phi) * (1.0 - c.phi) / *cfg.c0;
    return MaterialFields::uniform(mesh, c);
  }
  MaterialFields m;
  m.mu_f = cfg.materials.mu_f;
  m.alpha_bjs = cfg.materials.alpha_bjs;
  m.theta = cfg.materials.theta;
  m.rho_f = cfg.materials.rho_f;
  m.viscosity_scaled_permeability = cfg.materials.viscosity_scaled_permeability;
  m.phi = het->phi;
  m.kappa = het->kappa;
  m.mu_p = het->mu_p;
  m.lambda_p = het->lambda_p;
  std::vector<double> K(mesh.vertex_count()), rs(mesh.vertex_count()),
      rp(mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const double phi = het->phi.values()[v];
    K[v] = cfg.c0 ? (1.0 - phi) * (1.0 - phi) / *cfg.c0 : cfg.materials.K_bulk;
    // Constant saturated density: the solid density varies with porosity.
    const double rho_p = cfg.materials.rho_s * (1.0 - cfg.materials.phi) +
                         cfg.materials.rho_f * cfg.materials.phi;
    rp[v] = rho_p;
    rs[v] = (rho_p - cfg.materials.rho_f * phi) / (1.0 - phi);
  }
  m.K_bulk = NodalField(mesh, std::move(K));
  m.rho_s = NodalField(mesh, std::move(rs));
  m.rho_p = NodalField(mesh, std::move(rp));
  m.validate(mesh);
  return m;
}

ScenarioProblem make_problem(const Mesh2D& mesh, const ScenarioConfig& cfg,
                             const HeterogeneousFields* het) {
  ScenarioProblem p;
  p.spaces = build_spaces_storage(mesh, p.storage);
  p.materials = build_materials(mesh, cfg, het);

  for (const auto& bc : cfg.bcs) {
    if (bc.type == "traction") {
      p.tractions.push_back(bc);
      continue;
    }
    require(bc.type == "essential", ErrorCode::Argument,
            "bc type must be essential or traction, got " + bc.type);
    const Field field = parse_field(bc.field);
    const FunctionSpace& space = *p.spaces[field];
    const int m = marker::parse(bc.marker);
    const std::string profile = bc.profile;
    if (bc.components == "both") {
      const Vec2 val = bc.value;
      p.bcs.push_back({field, dirichlet_bcs(space, {m}, [val, profile](Vec2, double t) {
                         return val * profile_value(profile, t);
                       })});
    } else if (bc.components == "x" || bc.components == "y") {
      const double val = bc.scalar_value;
      p.bcs.push_back({field, dirichlet_bcs(
                                  space, {m},
                                  [val, profile](Vec2, double t) {
                                    return val * profile_value(profile, t);
                                  },
                                  bc.components == "x" ? 0 : 1)});
    } else if (bc.components == "normal" || bc.components == "tangential") {
      const CellTag tag =
          space.subdomain() == Subdomain::Stokes ? CellTag::Stokes : CellTag::Porous;
      const auto [axis, sign] = marker_normal_axis(mesh, m, tag);
      const int comp = bc.components == "normal" ? axis : 1 - axis;
      // v.n = s on an axis-aligned edge pins the normal component to s*sign.
      const double val = bc.components == "normal" ? bc.scalar_value * sign
                                                   : bc.scalar_value;
      p.bcs.push_back({field, dirichlet_bcs(
                                  space, {m},
                                  [val, profile](Vec2, double t) {
                                    return val * profile_value(profile, t);
                                  },
                                  comp)});
    } else {
      fail(ErrorCode::Argument, "unknown component selector " + bc.components);
    }
  }
  return p;
}

Mesh2D make_mesh(const ScenarioConfig& cfg) {
  if (!cfg.mesh_file.empty()) return load_mesh(cfg.mesh_file);
  if (cfg.fracture_domain)
    return build_fracture_mesh(*cfg.fracture_domain, cfg.channel_x0, cfg.channel_x1,
                               cfg.channel_height, cfg.nx, cfg.ny);
  require(cfg.stokes_box && cfg.porous_box, ErrorCode::Argument,
          "config must give a mesh file, a fracture domain, or two boxes");
  return build_two_block_mesh(*cfg.stokes_box, *cfg.porous_box, cfg.nx, cfg.ny);
}

}  // namespace

ScenarioConfig load_scenario_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, "config parse error in " + path + ": " + e.what());
  }

  ScenarioConfig cfg;
  try {
    cfg.name = j.value("name", cfg.name);
    const auto& jm = j.at("mesh");
    const std::string type = jm.at("type");
    auto box_of = [](const json& a) {
      return Box{a.at(0), a.at(1), a.at(2), a.at(3)};
    };
    if (type == "file") {
      cfg.mesh_file = jm.at("path");
    } else if (type == "two_block") {
      cfg.stokes_box = box_of(jm.at("stokes_box"));
      cfg.porous_box = box_of(jm.at("porous_box"));
      cfg.nx = jm.value("nx", cfg.nx);
      cfg.ny = jm.value("ny", cfg.ny);
    } else if (type == "fracture") {
      cfg.fracture_domain = box_of(jm.at("domain"));
      cfg.channel_x0 = jm.at("channel_x").at(0);
      cfg.channel_x1 = jm.at("channel_x").at(1);
      cfg.channel_height = jm.at("channel_height");
      cfg.nx = jm.value("nx", cfg.nx);
      cfg.ny = jm.value("ny", cfg.ny);
    } else {
      fail(ErrorCode::Format, "unknown mesh type " + type);
    }

    const auto& mm = j.at("materials");
    auto& c = cfg.materials;
    c.mu_f = mm.value("mu_f", c.mu_f);
    c.alpha_bjs = mm.value("alpha_bjs", c.alpha_bjs);
    c.theta = mm.value("theta", c.theta);
    c.rho_f = mm.value("rho_f", c.rho_f);
    c.phi = mm.value("phi", c.phi);
    c.kappa = mm.value("kappa", c.kappa);
    c.K_bulk = mm.value("K", c.K_bulk);
    c.mu_p = mm.value("mu_p", c.mu_p);
    c.lambda_p = mm.value("lambda_p", c.lambda_p);
    c.viscosity_scaled_permeability =
        mm.value("viscosity_scaled_permeability", c.viscosity_scaled_permeability);
    if (mm.contains("c0")) cfg.c0 = mm.at("c0").get<double>();
    if (mm.contains("rho_p")) {
      const double rho_p = mm.at("rho_p").get<double>();
      c.rho_s = (rho_p - c.rho_f * c.phi) / (1.0 - c.phi);
    } else {
      c.rho_s = mm.value("rho_s", c.rho_s);
    }

    if (j.contains("spe10")) {
      const auto& js = j.at("spe10");
      cfg.spe10_phi_file = js.at("phi_file");
      cfg.spe10_perm_file = js.at("perm_file");
      cfg.spe10_layer = js.at("layer");
      cfg.spe10.nu = js.value("nu", cfg.spe10.nu);
      cfg.spe10.youngs_scale = js.value("youngs_scale", cfg.spe10.youngs_scale);
      cfg.spe10.youngs_exponent = js.value("youngs_exponent", cfg.spe10.youngs_exponent);
      if (js.contains("kappa_range"))
        cfg.spe10.kappa_range = std::make_pair(js.at("kappa_range").at(0).get<double>(),
                                               js.at("kappa_range").at(1).get<double>());
    }

    for (const auto& jb : j.value("bcs", json::array())) {
      BCConfig bc;
      bc.marker = jb.at("marker");
      bc.field = jb.value("field", "u_f");
      bc.type = jb.at("type");
      bc.components = jb.value("components", "both");
      bc.profile = jb.value("profile", "constant");
      if (jb.contains("value")) {
        if (jb.at("value").is_array()) {
          bc.value = {jb.at("value").at(0), jb.at("value").at(1)};
        } else {
          bc.scalar_value = jb.at("value");
        }
      }
      if (jb.contains("amplitude")) {
        bc.amplitude = jb.at("amplitude");
        bc.normal_pressure = true;
      }
      cfg.bcs.push_back(bc);
    }

    const auto& jt = j.at("time");
    cfg.T = jt.at("T");
    cfg.tau = jt.at("tau");
    cfg.max_steps = jt.value("max_steps", 0);

    if (j.contains("mesh_motion")) {
      cfg.mesh_motion = j.at("mesh_motion").value("enabled", false);
      cfg.motion_inlet_marker =
          j.at("mesh_motion").value("inlet_marker", cfg.motion_inlet_marker);
    }

    for (const auto& jo : j.value("outputs", json::array())) {
      OutputRequest req;
      req.kind = jo.at("kind");
      req.every = jo.value("every", 1);
      req.prefix = jo.at("prefix");
      require(req.every >= 1, ErrorCode::Format, "output cadence must be >= 1");
      cfg.outputs.push_back(req);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, "config error in " + path + ": " + e.what());
  }
  return cfg;
}

namespace {

void write_fields_vtk(const ScenarioProblem& prob, const TransientState& state,
                      const std::string& path) {
  const Mesh2D& mesh = prob.spaces.uf->mesh();
  std::vector<VtkScalar> scalars;
  std::vector<VtkVector> vectors;
  scalars.push_back({"p_S", vertex_scalar_field(*prob.spaces.ps,
                                                field_part(prob.spaces, state.X, kPs))});
  scalars.push_back({"p_P", vertex_scalar_field(*prob.spaces.pp,
                                                field_part(prob.spaces, state.X, kPp))});
  scalars.push_back({"phi", prob.materials.phi.values()});
  scalars.push_back({"kappa", prob.materials.kappa.values()});
  vectors.push_back({"u_f", vertex_vector_field(*prob.spaces.uf,
                                                field_part(prob.spaces, state.X, kUf))});
  vectors.push_back({"u_r", vertex_vector_field(*prob.spaces.ur,
                                                field_part(prob.spaces, state.X, kUr))});
  vectors.push_back({"u_s", vertex_vector_field(*prob.spaces.us,
                                                field_part(prob.spaces, state.X, kUs))});
  vectors.push_back({"y_s", vertex_vector_field(*prob.spaces.ys,
                                                field_part(prob.spaces, state.X, kYs))});
  write_vtk(mesh, scalars, vectors, path);
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  const Mesh2D base_mesh = make_mesh(cfg);

  std::optional<HeterogeneousFields> het;
  if (!cfg.spe10_phi_file.empty()) {
    Box target = cfg.fracture_domain ? *cfg.fracture_domain : Box{0, 0, 1, 1};
    het = load_spe10_layer(cfg.spe10_phi_file, cfg.spe10_perm_file, cfg.spe10_layer,
                           target, base_mesh, cfg.spe10);
  }

  long N = std::lround(cfg.T / cfg.tau);
  require(N >= 1 && std::abs(N * cfg.tau - cfg.T) <= 1e-9 * std::max(1.0, cfg.T),
          ErrorCode::Argument, "final time must be an integer multiple of tau");
  if (cfg.max_steps > 0) N = std::min<long>(N, cfg.max_steps);

  ScenarioResult result;
  ScenarioProblem prob = make_problem(base_mesh, cfg, het ? &*het : nullptr);

  auto stepper_for = [&](const Mesh2D& mesh, const ScenarioProblem& p) {
    CoupledSystem sys = assemble_system(mesh, p.spaces, p.materials, 0.0);
    return TimeStepper(sys, p.bcs, cfg.tau, p.load_fn());
  };

  TransientState state;
  state.t = 0.0;
  state.step_index = 0;
  state.X = Eigen::VectorXd::Zero(prob.spaces.total_dim());

  // Moved-mesh storage: the stepper holds pointers into the current problem,
  // so both live side by side and are replaced together after mesh motion.
  std::optional<Mesh2D> moved_mesh;
  std::optional<ScenarioProblem> moved_prob;
  std::optional<TimeStepper> stepper;
  stepper.emplace(stepper_for(base_mesh, prob));

  auto emit_outputs = [&](const TransientState& st, bool final) {
    const ScenarioProblem& p = moved_prob ? *moved_prob : prob;
    for (const auto& out : cfg.outputs) {
      if (out.kind != "vtk_fields") continue;
      if (final || st.step_index % out.every == 0)
        write_fields_vtk(p, st, out.prefix + "_" + std::to_string(st.step_index) + ".vtk");
    }
  };

  std::vector<std::vector<double>> timeseries;
  emit_outputs(state, false);
  for (long n = 1; n <= N; ++n) {
    StepDiagnostics diag;
    try {
      state = stepper->step(state, &diag);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MeshTangled)
        fail(ErrorCode::MeshTangled,
             "mesh tangled at step " + std::to_string(n) + ": " + e.what());
      throw;
    }
    result.max_conservation = std::max(result.max_conservation, diag.conservation_rel);
    result.max_kinematic = std::max(result.max_kinematic, diag.kinematic_rel);

    const ScenarioProblem& p = moved_prob ? *moved_prob : prob;
    const double energy = discrete_energy(state, p.materials, p.spaces);
    result.energy_history.push_back(energy);
    const Eigen::VectorXd ys = field_part(p.spaces, state.X, kYs);
    for (int i = 0; i < ys.size() / 2; ++i)
      result.max_displacement =
          std::max(result.max_displacement, norm(Vec2{ys[2 * i], ys[2 * i + 1]}));
    timeseries.push_back({static_cast<double>(n), state.t, energy,
                          diag.conservation_rel, diag.kinematic_rel,
                          result.max_displacement});
    emit_outputs(state, n == N);

    if (cfg.mesh_motion && n < N) {
      // Total displacement from the reference configuration: harmonic
      // extension of the solid trace on the interface.
      std::map<int, Vec2> trace;
      const FunctionSpace& ys_space = *p.spaces.ys;
      for (const auto& e : base_mesh.interface().edges) {
        for (int v : {e.v0, e.v1}) {
          const int node = ys_space.vertex_node(v);
          trace[v] = {ys[2 * node], ys[2 * node + 1]};
        }
      }
      const std::vector<Vec2> disp =
          harmonic_extension(base_mesh, trace, marker::parse(cfg.motion_inlet_marker));
      try {
        moved_mesh.emplace(move_nodes(base_mesh, disp));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::MeshTangled)
          fail(ErrorCode::MeshTangled,
               "mesh tangled at step " + std::to_string(n) + ": " + e.what());
        throw;
      }
      moved_prob.emplace(make_problem(*moved_mesh, cfg, het ? &*het : nullptr));
      require(moved_prob->spaces.total_dim() == prob.spaces.total_dim(),
              ErrorCode::Numeric, "moved-mesh space layout changed");
      stepper.emplace(stepper_for(*moved_mesh, *moved_prob));
    }
  }

  for (const auto& out : cfg.outputs) {
    if (out.kind != "csv_timeseries") continue;
    write_csv({"step", "t", "energy", "conservation_rel", "kinematic_rel", "max_ys"},
              timeseries, out.prefix + "_timeseries.csv");
  }

  result.steps_completed = static_cast<int>(N);
  result.final_time = state.t;
  const ScenarioProblem& p = moved_prob ? *moved_prob : prob;
  result.final_energy = discrete_energy(state, p.materials, p.spaces);
  result.final_state = std::move(state);
  return result;
}

}  // namespace fpsi
