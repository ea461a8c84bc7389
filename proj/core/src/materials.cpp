#include "fpsi/materials.hpp"

#include <cmath>
#include <functional>

#include "fpsi/errors.hpp"

namespace fpsi {

NodalField::NodalField(const Mesh2D& mesh, std::vector<double> vertex_values)
    : values_(std::move(vertex_values)) {
  require(values_.size() == mesh.vertices().size(), ErrorCode::Argument,
          "nodal field size does not match vertex count");
}

NodalField NodalField::constant(const Mesh2D& mesh, double value) {
  NodalField f;
  f.values_.assign(mesh.vertices().size(), value);
  f.uniform_ = true;
  return f;
}

Vec2 NodalField::gradient(const Mesh2D& mesh, int t) const {
  if (uniform_) return {0.0, 0.0};
  const auto& tri = mesh.triangles()[t];
  const Vec2 a = mesh.vertices()[tri[0]];
  const Vec2 b = mesh.vertices()[tri[1]];
  const Vec2 c = mesh.vertices()[tri[2]];
  const double det = cross(b - a, c - a);
  const double f0 = values_[tri[0]], f1 = values_[tri[1]], f2 = values_[tri[2]];
  // grad = sum f_i grad L_i with the standard P1 gradient formulas.
  const Vec2 g0 = rot90(c - b) / det;
  const Vec2 g1 = rot90(a - c) / det;
  const Vec2 g2 = rot90(b - a) / det;
  return g0 * f0 + g1 * f1 + g2 * f2;
}

MaterialFields MaterialFields::uniform(const Mesh2D& mesh, const Constants& c) {
  MaterialFields m;
  m.mu_f = c.mu_f;
  m.alpha_bjs = c.alpha_bjs;
  m.theta = c.theta;
  m.rho_f = c.rho_f;
  m.viscosity_scaled_permeability = c.viscosity_scaled_permeability;
  m.phi = NodalField::constant(mesh, c.phi);
  m.kappa = NodalField::constant(mesh, c.kappa);
  m.K_bulk = NodalField::constant(mesh, c.K_bulk);
  m.mu_p = NodalField::constant(mesh, c.mu_p);
  m.lambda_p = NodalField::constant(mesh, c.lambda_p);
  m.rho_s = NodalField::constant(mesh, c.rho_s);
  m.rho_p = NodalField::constant(mesh, c.rho_s * (1.0 - c.phi) + c.rho_f * c.phi);
  m.validate(mesh);
  return m;
}

namespace {

NodalField combine(const Mesh2D& mesh, const NodalField& a,
                   const std::function<double(double)>& f) {
  std::vector<double> v(mesh.vertices().size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = f(a.values()[i]);
  return NodalField(mesh, std::move(v));
}

}  // namespace

NodalField MaterialFields::weight_rho_f_phi(const Mesh2D& mesh) const {
  return combine(mesh, phi, [this](double p) { return rho_f * p; });
}

NodalField MaterialFields::weight_rho_s_one_minus_phi(const Mesh2D& mesh) const {
  std::vector<double> v(mesh.vertices().size());
  for (size_t i = 0; i < v.size(); ++i)
    v[i] = rho_s.values()[i] * (1.0 - phi.values()[i]);
  return NodalField(mesh, std::move(v));
}

NodalField MaterialFields::weight_storage(const Mesh2D& mesh) const {
  std::vector<double> v(mesh.vertices().size());
  for (size_t i = 0; i < v.size(); ++i) {
    const double om = 1.0 - phi.values()[i];
    v[i] = om * om / K_bulk.values()[i];
  }
  return NodalField(mesh, std::move(v));
}

NodalField MaterialFields::weight_drag(const Mesh2D& mesh) const {
  const double scale = viscosity_scaled_permeability ? mu_f : 1.0;
  std::vector<double> v(mesh.vertices().size());
  for (size_t i = 0; i < v.size(); ++i) {
    const double p = phi.values()[i];
    v[i] = scale * p * p / kappa.values()[i];
  }
  return NodalField(mesh, std::move(v));
}

NodalField MaterialFields::weight_theta(const Mesh2D& mesh) const {
  return NodalField::constant(mesh, theta);
}

void MaterialFields::validate(const Mesh2D& mesh) const {
  require(alpha_bjs >= 0.0, ErrorCode::Argument, "alpha_bjs must be >= 0");
  require(theta <= 0.0, ErrorCode::Argument, "theta must be <= 0 (fluid sink)");
  require(mu_f > 0.0 && rho_f > 0.0, ErrorCode::Argument, "mu_f and rho_f must be > 0");
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (!mesh.vertex_in_subdomain(v, CellTag::Porous)) continue;
    const double p = phi.values()[v];
    require(p > 0.0 && p < 1.0, ErrorCode::Argument,
            "porosity out of (0,1) at vertex " + std::to_string(v));
    require(kappa.values()[v] > 0.0, ErrorCode::Argument,
            "permeability not positive at vertex " + std::to_string(v));
    require(K_bulk.values()[v] > 0.0, ErrorCode::Argument,
            "bulk modulus not positive at vertex " + std::to_string(v));
    const double rp = rho_s.values()[v] * (1.0 - p) + rho_f * p;
    require(std::abs(rp - rho_p.values()[v]) <= 1e-12 * std::max(1.0, std::abs(rp)),
            ErrorCode::Argument,
            "rho_p inconsistent with rho_s(1-phi)+rho_f phi at vertex " + std::to_string(v));
  }
}

}  // namespace fpsi
