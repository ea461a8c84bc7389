#include "fpsi/mms.hpp"

#include <cmath>

#include "fpsi/errors.hpp"

namespace fpsi {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kC = 4.0 * kPi;  // transverse wavenumber of the porous fields

// Time profiles multiplying the spatial building blocks.
struct Profiles {
  double a, da;    // Stokes velocity/pressure
  double b, db;    // Q-part of u_r
  double wr, dwr;  // W-part of u_r
  double ws, dws;  // W-part of u_s
  double wy, dwy;  // W-part of y_s (dwy == ws by construction)
  double p, dp;    // porous pressure
};

Profiles profiles(double t) {
  return {std::sin(t), std::cos(t), t * t,     2.0 * t, -t,  -1.0,
          t,           1.0,         0.5 * t * t, t,     std::cos(t), -std::sin(t)};
}

// W(x,y) = (x^3 cos(cy), -2 x^3 sin(cy)) and its derivatives.
Vec2 W(Vec2 x) {
  const double x3 = x.x * x.x * x.x;
  return {x3 * std::cos(kC * x.y), -2.0 * x3 * std::sin(kC * x.y)};
}
Mat2 grad_W(Vec2 x) {
  const double x2 = x.x * x.x, x3 = x2 * x.x;
  const double C = std::cos(kC * x.y), S = std::sin(kC * x.y);
  return {3.0 * x2 * C, -kC * x3 * S, -6.0 * x2 * S, -2.0 * kC * x3 * C};
}
Vec2 div_eps_W(Vec2 x) {
  const double x1 = x.x, x2 = x.x * x.x, x3 = x2 * x.x;
  const double C = std::cos(kC * x.y), S = std::sin(kC * x.y);
  return {6.0 * x1 * C - 0.5 * kC * C * x2 * (kC * x1 + 6.0),
          -0.5 * S * (3.0 * kC * x2 + 12.0 * x1) + 2.0 * kC * kC * x3 * S};
}
Vec2 grad_div_W(Vec2 x) {
  const double x1 = x.x, x2 = x.x * x.x;
  const double C = std::cos(kC * x.y), S = std::sin(kC * x.y);
  return {6.0 * x1 * C * (1.0 - kC * x1), kC * x2 * S * (2.0 * kC * x1 - 3.0)};
}

// Q(x,y) = (sin^2(cy), sin^2(cy)).
Vec2 Q(Vec2 x) {
  const double s = std::sin(kC * x.y);
  return {s * s, s * s};
}
Mat2 grad_Q(Vec2 x) {
  const double s2 = kC * std::sin(2.0 * kC * x.y);
  return {0.0, s2, 0.0, s2};
}
Vec2 div_eps_Q(Vec2 x) {
  const double c2 = kC * kC * std::cos(2.0 * kC * x.y);
  return {c2, 2.0 * c2};
}

// Stokes blocks: U = (-cos(pi x) sin(pi y), sin(pi x) cos(pi y)), P = cos cos.
Vec2 U(Vec2 x) {
  return {-std::cos(kPi * x.x) * std::sin(kPi * x.y),
          std::sin(kPi * x.x) * std::cos(kPi * x.y)};
}
Mat2 grad_U(Vec2 x) {
  const double sx = std::sin(kPi * x.x), cx = std::cos(kPi * x.x);
  const double sy = std::sin(kPi * x.y), cy = std::cos(kPi * x.y);
  return {kPi * sx * sy, -kPi * cx * cy, kPi * cx * cy, -kPi * sx * sy};
}
double Pstokes(Vec2 x) { return std::cos(kPi * x.x) * std::cos(kPi * x.y); }
Vec2 grad_Pstokes(Vec2 x) {
  return {-kPi * std::sin(kPi * x.x) * std::cos(kPi * x.y),
          -kPi * std::cos(kPi * x.x) * std::sin(kPi * x.y)};
}
double Pporous(Vec2 x) { return std::sin(kPi * x.x) * std::sin(kPi * x.y); }
Vec2 grad_Pporous(Vec2 x) {
  return {kPi * std::cos(kPi * x.x) * std::sin(kPi * x.y),
          kPi * std::sin(kPi * x.x) * std::cos(kPi * x.y)};
}

}  // namespace

ManufacturedCase ManufacturedCase::standard() { return ManufacturedCase(false); }
ManufacturedCase ManufacturedCase::steady() { return ManufacturedCase(true); }

MaterialFields ManufacturedCase::materials(const Mesh2D& mesh) const {
  MaterialFields::Constants c;
  c.mu_f = params_.mu_f;
  c.alpha_bjs = params_.alpha_bjs;
  c.theta = params_.theta;
  c.rho_f = params_.rho_f;
  c.rho_s = (params_.rho_p - params_.rho_f * params_.phi) / (1.0 - params_.phi);
  c.phi = params_.phi;
  c.kappa = params_.kappa;
  c.K_bulk = params_.K;
  c.mu_p = params_.mu_p;
  c.lambda_p = params_.lambda_p;
  return MaterialFields::uniform(mesh, c);
}

// The steady variant uses quadratic velocity/displacement fields with linear
// pressures: everything lies inside the Taylor-Hood spaces and every load
// integral is exact, so the interpolated fields form an exact fixed point of
// the time stepper.
Vec2 ManufacturedCase::uf(Vec2 x, double t) const {
  if (steady_) return {x.y * x.y, x.x * x.x};
  return U(x) * profiles(t).a;
}
Mat2 ManufacturedCase::grad_uf(Vec2 x, double t) const {
  if (steady_) return {0.0, 2.0 * x.y, 2.0 * x.x, 0.0};
  return grad_U(x) * profiles(t).a;
}
Vec2 ManufacturedCase::dt_uf(Vec2 x, double t) const {
  if (steady_) return {0.0, 0.0};
  return U(x) * profiles(t).da;
}
double ManufacturedCase::ps(Vec2 x, double t) const {
  if (steady_) return 2.0 + x.x - x.y;
  return Pstokes(x) * profiles(t).a;
}
Vec2 ManufacturedCase::grad_ps(Vec2 x, double t) const {
  if (steady_) return {1.0, -1.0};
  return grad_Pstokes(x) * profiles(t).a;
}

Vec2 ManufacturedCase::ur(Vec2 x, double t) const {
  if (steady_) return {x.x * x.x + x.y * x.y, x.x * x.y - 2.0 * x.y * x.y};
  const auto f = profiles(t);
  return Q(x) * f.b + W(x) * f.wr;
}
Mat2 ManufacturedCase::grad_ur(Vec2 x, double t) const {
  if (steady_) return {2.0 * x.x, 2.0 * x.y, x.y, x.x - 4.0 * x.y};
  const auto f = profiles(t);
  return grad_Q(x) * f.b + grad_W(x) * f.wr;
}
Vec2 ManufacturedCase::dt_ur(Vec2 x, double t) const {
  if (steady_) return {0.0, 0.0};
  const auto f = profiles(t);
  return Q(x) * f.db + W(x) * f.dwr;
}
Vec2 ManufacturedCase::us(Vec2 x, double t) const {
  if (steady_) return {0.0, 0.0};
  return W(x) * profiles(t).ws;
}
Mat2 ManufacturedCase::grad_us(Vec2 x, double t) const {
  if (steady_) return {};
  return grad_W(x) * profiles(t).ws;
}
Vec2 ManufacturedCase::dt_us(Vec2 x, double t) const {
  if (steady_) return {0.0, 0.0};
  return W(x) * profiles(t).dws;
}
Vec2 ManufacturedCase::ys(Vec2 x, double t) const {
  if (steady_) return {0.25 * (x.x * x.x - x.y * x.y), 0.5 * x.x * x.y};
  return W(x) * profiles(t).wy;
}
Mat2 ManufacturedCase::grad_ys(Vec2 x, double t) const {
  if (steady_) return {0.5 * x.x, -0.5 * x.y, 0.5 * x.y, 0.5 * x.x};
  return grad_W(x) * profiles(t).wy;
}
Vec2 ManufacturedCase::dt_ys(Vec2 x, double t) const {
  if (steady_) return {0.0, 0.0};
  return W(x) * profiles(t).dwy;
}
double ManufacturedCase::pp(Vec2 x, double t) const {
  if (steady_) return 1.0 + 2.0 * x.x + x.y;
  return Pporous(x) * profiles(t).p;
}
double ManufacturedCase::dt_pp(Vec2 x, double t) const {
  if (steady_) return 0.0;
  return Pporous(x) * profiles(t).dp;
}
Vec2 ManufacturedCase::grad_pp(Vec2 x, double t) const {
  if (steady_) return {2.0, 1.0};
  return grad_Pporous(x) * profiles(t).p;
}

Vec2 ManufacturedCase::div_eps_uf(Vec2 x, double t) const {
  if (steady_) return {1.0, 1.0};
  return U(x) * (-kPi * kPi * profiles(t).a);
}
Vec2 ManufacturedCase::div_eps_ufp(Vec2 x, double t) const {
  if (steady_) return {3.5, -4.0};
  const auto f = profiles(t);
  return div_eps_Q(x) * f.b + div_eps_W(x) * (f.wr + f.ws);
}
Vec2 ManufacturedCase::div_eps_ys(Vec2 x, double t) const {
  if (steady_) return {0.5, 0.0};
  return div_eps_W(x) * profiles(t).wy;
}
Vec2 ManufacturedCase::grad_div_ys(Vec2 x, double t) const {
  if (steady_) return {1.0, 0.0};
  return grad_div_W(x) * profiles(t).wy;
}

Mat2 ManufacturedCase::sigma_f_stokes(Vec2 x, double t) const {
  return 2.0 * params_.mu_f * sym(grad_uf(x, t)) - identity2(ps(x, t));
}
Mat2 ManufacturedCase::sigma_f_porous(Vec2 x, double t) const {
  const Mat2 eps_ufp = sym(grad_ur(x, t) + grad_us(x, t));
  return 2.0 * params_.mu_f * params_.phi * eps_ufp -
         identity2(params_.phi * pp(x, t));
}
Mat2 ManufacturedCase::sigma_s_porous(Vec2 x, double t) const {
  const Mat2 g = grad_ys(x, t);
  return 2.0 * params_.mu_p * sym(g) + identity2(params_.lambda_p * g.trace()) -
         identity2((1.0 - params_.phi) * pp(x, t));
}
double ManufacturedCase::lambda_exact(Vec2 x, double t) const {
  const Vec2 n_s{0.0, 1.0};
  return -dot(sigma_f_stokes(x, t).apply(n_s), n_s);
}

SourceSet ManufacturedCase::sources() const {
  const Params p = params_;
  const ManufacturedCase self = *this;
  SourceSet s;
  s.f_S = [self, p](Vec2 x, double t) {
    return self.div_eps_uf(x, t) * (-2.0 * p.mu_f) + self.grad_ps(x, t);
  };
  s.r_S = [self](Vec2 x, double t) { return self.grad_uf(x, t).trace(); };
  s.override_mom_r = [self, p](Vec2 x, double t) {
    const Vec2 u_r = self.ur(x, t);
    const Vec2 u_s = self.us(x, t);
    return p.rho_f * p.phi * (self.dt_ur(x, t) + self.dt_us(x, t)) -
           2.0 * p.mu_f * p.phi * self.div_eps_ufp(x, t) +
           p.phi * self.grad_pp(x, t) + (p.phi * p.phi / p.kappa) * u_r -
           p.theta * (u_r + u_s);
  };
  s.override_mom_s = [self, p](Vec2 x, double t) {
    const Vec2 u_r = self.ur(x, t);
    const Vec2 u_s = self.us(x, t);
    return p.rho_f * p.phi * self.dt_ur(x, t) + p.rho_p * self.dt_us(x, t) -
           2.0 * p.mu_f * p.phi * self.div_eps_ufp(x, t) -
           2.0 * p.mu_p * self.div_eps_ys(x, t) - p.lambda_p * self.grad_div_ys(x, t) +
           self.grad_pp(x, t) - p.theta * (u_r + u_s);
  };
  s.override_mass_p = [self, p](Vec2 x, double t) {
    const double om = 1.0 - p.phi;
    return om * om / p.K * self.dt_pp(x, t) + self.grad_us(x, t).trace() +
           p.phi * self.grad_ur(x, t).trace();
  };
  return s;
}

ManufacturedCase::Corrections ManufacturedCase::interface_corrections(Vec2 x,
                                                                      double t) const {
  require(std::abs(x.y - interface_y()) < 1e-9, ErrorCode::Argument,
          "interface corrections requested off the interface");
  const Vec2 n_s{0.0, 1.0}, n_p{0.0, -1.0}, tau{1.0, 0.0};
  const Vec2 sfs_ns = sigma_f_stokes(x, t).apply(n_s);
  const Vec2 sfp_np = sigma_f_porous(x, t).apply(n_p);
  const Vec2 ssp_np = sigma_s_porous(x, t).apply(n_p);

  Corrections m;
  m.m1 = dot(uf(x, t), n_s) + dot(dt_ys(x, t) + ur(x, t), n_p);
  m.m2 = -dot(sfs_ns, n_s) + dot(sfp_np, n_p);
  m.m3 = sfs_ns + sfp_np + ssp_np;
  const double z = params_.kappa;  // Z = (kappa tau) . tau
  m.m4 = -dot(sfs_ns, tau) -
         params_.mu_f * params_.alpha_bjs / std::sqrt(z) *
             dot(uf(x, t) - dt_ys(x, t), tau);
  m.m5 = dot(sfp_np, tau);
  return m;
}

InterfaceCorrections ManufacturedCase::corrections() const {
  const ManufacturedCase self = *this;
  InterfaceCorrections c;
  c.m1 = [self](Vec2 x, double t) { return self.interface_corrections(x, t).m1; };
  c.m2 = [self](Vec2 x, double t) { return self.interface_corrections(x, t).m2; };
  c.m3 = [self](Vec2 x, double t) { return self.interface_corrections(x, t).m3; };
  c.m4 = [self](Vec2 x, double t) { return self.interface_corrections(x, t).m4; };
  c.m5 = [self](Vec2 x, double t) { return self.interface_corrections(x, t).m5; };
  return c;
}

Eigen::VectorXd ManufacturedCase::exact_state(const Spaces& spaces, double t) const {
  Eigen::VectorXd X = Eigen::VectorXd::Zero(spaces.total_dim());
  const ManufacturedCase self = *this;
  set_field_part(spaces, X, kUf,
                 spaces.uf->interpolate([self](Vec2 x, double tt) { return self.uf(x, tt); }, t));
  set_field_part(spaces, X, kUr,
                 spaces.ur->interpolate([self](Vec2 x, double tt) { return self.ur(x, tt); }, t));
  set_field_part(spaces, X, kYs,
                 spaces.ys->interpolate([self](Vec2 x, double tt) { return self.ys(x, tt); }, t));
  set_field_part(spaces, X, kUs,
                 spaces.us->interpolate([self](Vec2 x, double tt) { return self.us(x, tt); }, t));
  set_field_part(spaces, X, kPs,
                 spaces.ps->interpolate([self](Vec2 x, double tt) { return self.ps(x, tt); }, t));
  set_field_part(spaces, X, kPp,
                 spaces.pp->interpolate([self](Vec2 x, double tt) { return self.pp(x, tt); }, t));
  set_field_part(
      spaces, X, kLm,
      spaces.lm->interpolate(
          [self](Vec2 x, double tt) { return self.lambda_exact(x, tt); }, t));
  return X;
}

// ---------------------------------------------------------------------------

MultiplierNorm::MultiplierNorm(const Mesh2D& mesh)
    : mesh_(&mesh),
      aux_space_(mesh, Subdomain::Porous, Family::P1, 1),
      stiffness_(assemble_component_laplacian(aux_space_, 2)),
      op_(constrain_operator(stiffness_, [&] {
        // Dirichlet on the porous outer boundary (every marked non-interface
        // edge bordering the porous subdomain).
        std::vector<int> dofs;
        for (const auto& be : mesh.boundary_edges()) {
          if (be.marker == marker::kInterface) continue;
          for (int n : aux_space_.nodes_on_edge(be)) dofs.push_back(n);
        }
        return dofs;
      }())),
      lu_(op_.matrix) {}

Eigen::VectorXd MultiplierNorm::interface_load(const FunctionSpace& lambda_space,
                                               const Eigen::VectorXd& lambda_h,
                                               const ScalarFn& exact, double t) const {
  const auto& edges = mesh_->interface().edges;
  const auto& rule = edge_rule(kEdgeOrderDefault);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(aux_space_.dim());
  double Nl[3], Np[6];
  for (size_t ei = 0; ei < edges.size(); ++ei) {
    const auto& e = edges[ei];
    const Vec2 p0 = mesh_->vertices()[e.v0], p1 = mesh_->vertices()[e.v1];
    const int cpos = aux_space_.cell_pos_of_triangle(e.porous_tri);
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const double s = rule.points[q];
      const Vec2 x = p0 + s * (p1 - p0);
      FunctionSpace::shape_edge(lambda_space.family(), s, Nl);
      double lam_h = 0.0;
      for (int i = 0; i < lambda_space.nodes_per_cell(); ++i)
        lam_h += Nl[i] * lambda_h[lambda_space.cell_dof(static_cast<int>(ei), i, 0)];
      const double err = (exact ? exact(x, t) : 0.0) - lam_h;
      const double w = rule.weights[q] * e.length;
      // Porous P1 trace on the edge.
      const auto& tri = mesh_->triangles()[e.porous_tri];
      const Vec2 a = mesh_->vertices()[tri[0]];
      const Vec2 b = mesh_->vertices()[tri[1]];
      const Vec2 c = mesh_->vertices()[tri[2]];
      const double det = cross(b - a, c - a);
      const double l1 = cross(x - a, c - a) / det;
      const double l2 = cross(b - a, x - a) / det;
      FunctionSpace::shape_tri(Family::P1, l1, l2, Np);
      for (int i = 0; i < 3; ++i)
        rhs[aux_space_.cell_dof(cpos, i, 0)] += w * err * Np[i];
    }
  }
  return rhs;
}

double MultiplierNorm::solve_energy(const Eigen::VectorXd& rhs_in) const {
  Eigen::VectorXd rhs = rhs_in;
  for (int d : op_.dofs) rhs[d] = 0.0;
  const Eigen::VectorXd psi = lu_.solve(rhs);
  return std::sqrt(psi.dot(stiffness_ * psi));
}

double MultiplierNorm::error_norm(const FunctionSpace& lambda_space,
                                  const Eigen::VectorXd& lambda_h, const ScalarFn& exact,
                                  double t) const {
  return solve_energy(interface_load(lambda_space, lambda_h, exact, t));
}

double MultiplierNorm::diff_norm(const FunctionSpace& lambda_space,
                                 const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  return solve_energy(interface_load(lambda_space, Eigen::VectorXd(b - a), nullptr, 0.0));
}

// ---------------------------------------------------------------------------

const std::array<const char*, kErrVars> kErrNames = {
    "e_uf_h1", "e_ps_l2", "e_ur_l2", "e_pp_l2", "e_ys_h1", "e_us_l2", "e_lambda"};

double ErrorReport::rate(int row, int var) const {
  if (row <= 0 || row >= static_cast<int>(rows.size())) return std::nan("");
  const double ec = rows[row - 1].err[var];
  const double ef = rows[row].err[var];
  if (!(ec > 0.0) || !(ef > 0.0)) return std::nan("");
  return std::log2(ec / ef);
}

namespace {

// Samples a coefficient field (value and gradient) on one cell at one point.
struct CellSampler {
  const FunctionSpace* space;
  const Eigen::VectorXd* coeffs;
  int cpos = -1;
  double N[6];
  Vec2 G[6];

  void bind(const FunctionSpace& s, const Eigen::VectorXd& c) {
    space = &s;
    coeffs = &c;
  }
  void at(int tri, double l1, double l2, bool grads) {
    cpos = space->cell_pos_of_triangle(tri);
    FunctionSpace::shape_tri(space->family(), l1, l2, N);
    if (!grads) return;
    const auto& mesh = space->mesh();
    const auto& tv = mesh.triangles()[tri];
    const Vec2 a = mesh.vertices()[tv[0]];
    const Vec2 b = mesh.vertices()[tv[1]];
    const Vec2 c = mesh.vertices()[tv[2]];
    const Vec2 d1 = b - a, d2 = c - a;
    const double det = cross(d1, d2);
    FunctionSpace::shape_tri_grad(space->family(), l1, l2, G);
    for (int i = 0; i < space->nodes_per_cell(); ++i)
      G[i] = {(d2.y * G[i].x - d1.y * G[i].y) / det,
              (-d2.x * G[i].x + d1.x * G[i].y) / det};
  }
  double value_scalar() const {
    double v = 0.0;
    for (int i = 0; i < space->nodes_per_cell(); ++i)
      v += N[i] * (*coeffs)[space->cell_dof(cpos, i, 0)];
    return v;
  }
  Vec2 value_vector() const {
    Vec2 v;
    for (int i = 0; i < space->nodes_per_cell(); ++i) {
      v.x += N[i] * (*coeffs)[space->cell_dof(cpos, i, 0)];
      v.y += N[i] * (*coeffs)[space->cell_dof(cpos, i, 1)];
    }
    return v;
  }
  Mat2 grad_vector() const {
    Mat2 g;
    for (int i = 0; i < space->nodes_per_cell(); ++i) {
      const double vx = (*coeffs)[space->cell_dof(cpos, i, 0)];
      const double vy = (*coeffs)[space->cell_dof(cpos, i, 1)];
      g.a11 += vx * G[i].x;
      g.a12 += vx * G[i].y;
      g.a21 += vy * G[i].x;
      g.a22 += vy * G[i].y;
    }
    return g;
  }
};

double frob2(const Mat2& m) {
  return m.a11 * m.a11 + m.a12 * m.a12 + m.a21 * m.a21 + m.a22 * m.a22;
}

}  // namespace

std::array<double, kErrVars> error_norms(const TransientState& state,
                                         const ManufacturedCase& mcase,
                                         const Spaces& spaces,
                                         const MultiplierNorm& mnorm) {
  const double t = state.t;
  const Mesh2D& mesh = spaces.uf->mesh();
  const auto& rule = triangle_rule(6);
  std::array<double, kErrVars> acc{};

  const Eigen::VectorXd uf = field_part(spaces, state.X, kUf);
  const Eigen::VectorXd ps = field_part(spaces, state.X, kPs);
  const Eigen::VectorXd ur = field_part(spaces, state.X, kUr);
  const Eigen::VectorXd pp = field_part(spaces, state.X, kPp);
  const Eigen::VectorXd ys = field_part(spaces, state.X, kYs);
  const Eigen::VectorXd us = field_part(spaces, state.X, kUs);
  const Eigen::VectorXd lm = field_part(spaces, state.X, kLm);

  CellSampler s_uf, s_ps, s_ur, s_pp, s_ys, s_us;
  s_uf.bind(*spaces.uf, uf);
  s_ps.bind(*spaces.ps, ps);
  s_ur.bind(*spaces.ur, ur);
  s_pp.bind(*spaces.pp, pp);
  s_ys.bind(*spaces.ys, ys);
  s_us.bind(*spaces.us, us);

  for (int tri = 0; tri < mesh.triangle_count(); ++tri) {
    const auto& tv = mesh.triangles()[tri];
    const double detj = cross(mesh.vertices()[tv[1]] - mesh.vertices()[tv[0]],
                              mesh.vertices()[tv[2]] - mesh.vertices()[tv[0]]);
    const bool stokes = mesh.cell_tags()[tri] == CellTag::Stokes;
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const auto& p = rule.points[q];
      const double w = rule.weights[q] * detj;
      const Vec2 x = mesh.vertices()[tv[0]] * p.l0 + mesh.vertices()[tv[1]] * p.l1 +
                     mesh.vertices()[tv[2]] * p.l2;
      if (stokes) {
        s_uf.at(tri, p.l1, p.l2, true);
        s_ps.at(tri, p.l1, p.l2, false);
        const Vec2 eu = s_uf.value_vector() - mcase.uf(x, t);
        const Mat2 eg = s_uf.grad_vector() - mcase.grad_uf(x, t);
        acc[0] += w * (dot(eu, eu) + frob2(eg));
        const double ep = s_ps.value_scalar() - mcase.ps(x, t);
        acc[1] += w * ep * ep;
      } else {
        s_ur.at(tri, p.l1, p.l2, false);
        s_pp.at(tri, p.l1, p.l2, false);
        s_ys.at(tri, p.l1, p.l2, true);
        s_us.at(tri, p.l1, p.l2, false);
        const Vec2 er = s_ur.value_vector() - mcase.ur(x, t);
        acc[2] += w * dot(er, er);
        const double epp = s_pp.value_scalar() - mcase.pp(x, t);
        acc[3] += w * epp * epp;
        const Vec2 ey = s_ys.value_vector() - mcase.ys(x, t);
        const Mat2 egy = s_ys.grad_vector() - mcase.grad_ys(x, t);
        acc[4] += w * (dot(ey, ey) + frob2(egy));
        const Vec2 eus = s_us.value_vector() - mcase.us(x, t);
        acc[5] += w * dot(eus, eus);
      }
    }
  }
  std::array<double, kErrVars> out;
  for (int i = 0; i < 6; ++i) out[i] = std::sqrt(acc[i]);
  out[6] = mnorm.error_norm(
      *spaces.lm, lm,
      [&mcase](Vec2 x, double tt) { return mcase.lambda_exact(x, tt); }, t);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Problem {
  std::vector<FunctionSpace> storage;
  Spaces spaces;
  MaterialFields materials;
  SourceSet sources;
  InterfaceCorrections corrections;
  std::vector<GlobalBC> bcs;
  ManufacturedCase mcase = ManufacturedCase::standard();

  static Problem make(const Mesh2D& mesh, const ManufacturedCase& mcase) {
    Problem p;
    p.mcase = mcase;
    p.spaces = build_spaces_storage(mesh, p.storage);
    p.materials = mcase.materials(mesh);
    p.sources = mcase.sources();
    p.corrections = mcase.corrections();
    const std::vector<int> outer = {marker::kWallLeft, marker::kWallRight,
                                    marker::kWallTop, marker::kWallBottom};
    const ManufacturedCase mc = mcase;
    p.bcs.push_back({kUf, dirichlet_bcs(*p.spaces.uf, outer,
                                        [mc](Vec2 x, double t) { return mc.uf(x, t); })});
    p.bcs.push_back({kUr, dirichlet_bcs(*p.spaces.ur, outer,
                                        [mc](Vec2 x, double t) { return mc.ur(x, t); })});
    p.bcs.push_back({kYs, dirichlet_bcs(*p.spaces.ys, outer,
                                        [mc](Vec2 x, double t) { return mc.ys(x, t); })});
    return p;
  }

  TimeStepper stepper(const Mesh2D& mesh, double tau) const {
    CoupledSystem sys = assemble_system(mesh, spaces, materials, 0.0, sources,
                                        &corrections);
    const Spaces sp = spaces;
    const MaterialFields mats = materials;
    const SourceSet src = sources;
    const InterfaceCorrections corr = corrections;
    return TimeStepper(sys, bcs, tau, [sp, mats, src, corr](double t) {
      return assemble_load(sp, mats, src, &corr, t);
    });
  }

  TransientState initial_state() const {
    TransientState st;
    st.t = 0.0;
    st.step_index = 0;
    st.X = mcase.exact_state(spaces, 0.0);
    return st;
  }
};

}  // namespace

ErrorReport spatial_convergence_study(int levels, TransientMonitor* monitor) {
  require(levels >= 1 && levels <= 6, ErrorCode::Argument,
          "spatial study supports 1..6 levels");
  const ManufacturedCase mcase = ManufacturedCase::standard();
  const double T = 1.0;
  ErrorReport report;

  Mesh2D mesh = build_two_block_mesh(mcase.stokes_box(), mcase.porous_box(), 4, 8);
  for (int level = 0; level < levels; ++level) {
    if (level > 0) mesh = refine_uniform(mesh);
    const double h = mesh.max_diameter();
    const long N = std::max<long>(1, std::lround(T / (h * h)));
    const double tau = T / static_cast<double>(N);

    Problem prob = Problem::make(mesh, mcase);
    TimeStepper stepper = prob.stepper(mesh, tau);
    MultiplierNorm mnorm(mesh);

    TransientState state = prob.initial_state();
    for (long n = 0; n < N; ++n) {
      StepDiagnostics diag;
      state = stepper.step(state, monitor ? &diag : nullptr);
      if (monitor) monitor->absorb(diag);
    }

    ErrorRow row;
    row.level = level;
    row.h = h;
    row.tau = tau;
    row.dofs = prob.spaces.total_dim();
    row.err = error_norms(state, mcase, prob.spaces, mnorm);
    report.rows.push_back(row);
  }
  return report;
}

ErrorReport temporal_convergence_study(int mesh_level, double tau0, int halvings,
                                       TransientMonitor* monitor) {
  require(mesh_level >= 0 && mesh_level <= 4, ErrorCode::Argument,
          "temporal study supports mesh levels 0..4");
  require(tau0 > 0.0 && halvings >= 1, ErrorCode::Argument, "bad tau ladder");
  const ManufacturedCase mcase = ManufacturedCase::standard();
  const double T = 1.0;

  Mesh2D mesh = build_two_block_mesh(mcase.stokes_box(), mcase.porous_box(), 4, 8);
  for (int l = 0; l < mesh_level; ++l) mesh = refine_uniform(mesh);

  Problem prob = Problem::make(mesh, mcase);
  MultiplierNorm mnorm(mesh);

  // Space norm matrices: full H1 for u_f and y_s, L2 elsewhere.
  const NodalField one = NodalField::constant(mesh, 1.0);
  const SparseMat n_uf = assemble_weighted_mass(*prob.spaces.uf, *prob.spaces.uf, one,
                                                kVolumeOrderConstant) +
                         assemble_component_laplacian(*prob.spaces.uf);
  const SparseMat n_ys = assemble_weighted_mass(*prob.spaces.ys, *prob.spaces.ys, one,
                                                kVolumeOrderConstant) +
                         assemble_component_laplacian(*prob.spaces.ys);
  const SparseMat n_ur =
      assemble_weighted_mass(*prob.spaces.ur, *prob.spaces.ur, one, kVolumeOrderConstant);
  const SparseMat n_us =
      assemble_weighted_mass(*prob.spaces.us, *prob.spaces.us, one, kVolumeOrderConstant);
  const SparseMat n_ps =
      assemble_weighted_mass(*prob.spaces.ps, *prob.spaces.ps, one, kVolumeOrderConstant);
  const SparseMat n_pp =
      assemble_weighted_mass(*prob.spaces.pp, *prob.spaces.pp, one, kVolumeOrderConstant);

  // Reference transient on the same mesh: two fine-step runs combined by
  // Richardson extrapolation (2 X_{tau/4} - X_{tau/2} at matching times), so
  // the reference bias is second order and does not tilt the measured rates.
  const double tau_min = tau0 / std::pow(2.0, halvings);
  const long n_min = std::lround(T / tau_min);
  require(std::abs(n_min * tau_min - T) < 1e-9, ErrorCode::Argument,
          "tau ladder must divide the final time");
  std::vector<Eigen::VectorXd> ref_states(n_min + 1);  // at multiples of tau_min
  for (int half : {2, 4}) {
    const double tau_ref = tau_min / half;
    TimeStepper ref_stepper = prob.stepper(mesh, tau_ref);
    TransientState st = prob.initial_state();
    const double w = half == 4 ? 2.0 : -1.0;
    ref_states[0] = st.X;  // identical initial state for both runs
    for (long n = 1; n <= n_min * half; ++n) {
      st = ref_stepper.step(st);
      if (n % half == 0) {
        auto& slot = ref_states[n / half];
        if (slot.size() == 0)
          slot = w * st.X;
        else
          slot += w * st.X;
      }
    }
  }

  ErrorReport report;
  for (int k = 0; k <= halvings; ++k) {
    const double tau = tau0 / std::pow(2.0, k);
    const long N = std::lround(T / tau);
    require(std::abs(N * tau - T) < 1e-9, ErrorCode::Argument,
            "tau ladder must divide the final time");
    const long stride = std::lround(tau / tau_min);
    TimeStepper stepper = prob.stepper(mesh, tau);

    std::array<double, kErrVars> acc{};
    TransientState state = prob.initial_state();
    for (long n = 1; n <= N; ++n) {
      StepDiagnostics diag;
      state = stepper.step(state, monitor ? &diag : nullptr);
      if (monitor) monitor->absorb(diag);
      const Eigen::VectorXd& ref = ref_states[n * stride];
      const Eigen::VectorXd d = state.X - ref;
      const Eigen::VectorXd d_uf = field_part(prob.spaces, d, kUf);
      const Eigen::VectorXd d_ps = field_part(prob.spaces, d, kPs);
      const Eigen::VectorXd d_ur = field_part(prob.spaces, d, kUr);
      const Eigen::VectorXd d_pp = field_part(prob.spaces, d, kPp);
      const Eigen::VectorXd d_ys = field_part(prob.spaces, d, kYs);
      const Eigen::VectorXd d_us = field_part(prob.spaces, d, kUs);
      acc[0] += tau * d_uf.dot(n_uf * d_uf);
      acc[1] += tau * d_ps.dot(n_ps * d_ps);
      acc[2] += tau * d_ur.dot(n_ur * d_ur);
      acc[3] += tau * d_pp.dot(n_pp * d_pp);
      acc[4] += tau * d_ys.dot(n_ys * d_ys);
      acc[5] += tau * d_us.dot(n_us * d_us);
      const double lam = mnorm.diff_norm(*prob.spaces.lm,
                                         field_part(prob.spaces, ref, kLm),
                                         field_part(prob.spaces, state.X, kLm));
      acc[6] += tau * lam * lam;
    }
    ErrorRow row;
    row.level = k;
    row.h = mesh.max_diameter();
    row.tau = tau;
    row.dofs = prob.spaces.total_dim();
    for (int v = 0; v < kErrVars; ++v) row.err[v] = std::sqrt(acc[v]);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace fpsi
