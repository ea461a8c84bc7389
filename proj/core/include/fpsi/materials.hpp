#pragma once

#include <vector>

#include "fpsi/mesh.hpp"

namespace fpsi {

// Piecewise-linear nodal coefficient field over the mesh vertices. Constants
// are wrapped as uniform fields so that assembly has a single evaluation path.
class NodalField {
public:
  NodalField() = default;
  NodalField(const Mesh2D& mesh, std::vector<double> vertex_values);
  static NodalField constant(const Mesh2D& mesh, double value);

  bool uniform() const { return uniform_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double at_vertex(int v) const { return values_[v]; }
  // P1 evaluation on triangle t at barycentric (l1, l2).
  double value(const Mesh2D& mesh, int t, double l1, double l2) const {
    const auto& tri = mesh.triangles()[t];
    return (1.0 - l1 - l2) * values_[tri[0]] + l1 * values_[tri[1]] + l2 * values_[tri[2]];
  }
  Vec2 gradient(const Mesh2D& mesh, int t) const;

private:
  std::vector<double> values_;
  bool uniform_ = false;
};

// Physical parameter set of the coupled problem. Spatially varying
// coefficients are P1 nodal fields on the porous subdomain; constants are
// wrapped as uniform fields.
struct MaterialFields {
  double mu_f = 1.0;        // fluid viscosity
  double alpha_bjs = 0.0;   // interface friction coefficient, >= 0
  double theta = 0.0;       // sink coefficient, <= 0
  double rho_f = 1.0;       // fluid density
  bool viscosity_scaled_permeability = false;  // drag mu_f*phi^2/kappa instead of phi^2/kappa

  NodalField phi;       // porosity, 0 < phi < 1
  NodalField kappa;     // permeability, > 0
  NodalField K_bulk;    // solid-grain bulk modulus
  NodalField mu_p;      // Lame parameters
  NodalField lambda_p;
  NodalField rho_s;     // solid density
  NodalField rho_p;     // saturated density, rho_p = rho_s (1-phi) + rho_f phi

  struct Constants {
    double mu_f = 1.0, alpha_bjs = 0.0, theta = 0.0;
    double rho_f = 1.0, rho_s = 1.0;
    double phi = 0.5, kappa = 1.0, K_bulk = 1.0;
    double mu_p = 1.0, lambda_p = 1.0;
    bool viscosity_scaled_permeability = false;
  };
  static MaterialFields uniform(const Mesh2D& mesh, const Constants& c);

  // Coefficient weights of the mass forms, as nodal fields.
  NodalField weight_rho_f_phi(const Mesh2D& mesh) const;
  NodalField weight_rho_p() const { return rho_p; }
  NodalField weight_rho_s_one_minus_phi(const Mesh2D& mesh) const;
  NodalField weight_storage(const Mesh2D& mesh) const;  // (1-phi)^2 / K
  NodalField weight_drag(const Mesh2D& mesh) const;     // [mu_f] phi^2 / kappa
  NodalField weight_theta(const Mesh2D& mesh) const;

  // Checks 0 < phi < 1, kappa > 0, theta <= 0 and the rho_p identity on the
  // porous-subdomain vertices. Throws Argument on violation.
  void validate(const Mesh2D& mesh) const;
};

}  // namespace fpsi
