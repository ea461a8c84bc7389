#pragma once

#include <array>
#include <string>
#include <vector>

#include "fpsi/system.hpp"

namespace fpsi {

// Closed-form verification fields on the stacked unit squares
// Omega_S = (0,1)x(0,1), Omega_P = (0,1)x(1,2) with the flat interface at
// y = 1 (n_S = (0,1), n_P = (0,-1), tau = (1,0)). All space and time
// derivatives are hand-coded closed forms.
class ManufacturedCase {
public:
  struct Params {
    double lambda_p = 10.0, mu_p = 10.0, mu_f = 10.0, alpha_bjs = 1.0;
    double phi = 0.1, kappa = 1.0, rho_p = 1.0, rho_f = 1.0, K = 1.0, theta = -0.01;
  };

  static ManufacturedCase standard();  // time-dependent verification fields
  static ManufacturedCase steady();    // time-independent variant

  const Params& params() const { return params_; }
  double interface_y() const { return 1.0; }
  Box stokes_box() const { return {0.0, 0.0, 1.0, 1.0}; }
  Box porous_box() const { return {0.0, 1.0, 1.0, 2.0}; }

  MaterialFields materials(const Mesh2D& mesh) const;

  // Exact fields and their derivatives.
  Vec2 uf(Vec2 x, double t) const;
  Mat2 grad_uf(Vec2 x, double t) const;
  Vec2 dt_uf(Vec2 x, double t) const;
  double ps(Vec2 x, double t) const;
  Vec2 grad_ps(Vec2 x, double t) const;

  Vec2 ur(Vec2 x, double t) const;
  Mat2 grad_ur(Vec2 x, double t) const;
  Vec2 dt_ur(Vec2 x, double t) const;
  Vec2 us(Vec2 x, double t) const;
  Mat2 grad_us(Vec2 x, double t) const;
  Vec2 dt_us(Vec2 x, double t) const;
  Vec2 ys(Vec2 x, double t) const;
  Mat2 grad_ys(Vec2 x, double t) const;
  Vec2 dt_ys(Vec2 x, double t) const;
  double pp(Vec2 x, double t) const;
  double dt_pp(Vec2 x, double t) const;
  Vec2 grad_pp(Vec2 x, double t) const;

  // Second-derivative combinations used by the synthesized sources.
  Vec2 div_eps_uf(Vec2 x, double t) const;
  Vec2 div_eps_ufp(Vec2 x, double t) const;  // eps(u_r + u_s)
  Vec2 div_eps_ys(Vec2 x, double t) const;
  Vec2 grad_div_ys(Vec2 x, double t) const;

  // Exact stresses and the multiplier lambda = -(sigma_f^S n_S) . n_S.
  Mat2 sigma_f_stokes(Vec2 x, double t) const;
  Mat2 sigma_f_porous(Vec2 x, double t) const;
  Mat2 sigma_s_porous(Vec2 x, double t) const;
  double lambda_exact(Vec2 x, double t) const;

  // Synthesized volume sources making the exact fields solve the system.
  SourceSet sources() const;

  // Residuals of the interface conditions; x must lie on the interface.
  struct Corrections {
    double m1, m2, m4, m5;
    Vec2 m3;
  };
  Corrections interface_corrections(Vec2 x, double t) const;
  InterfaceCorrections corrections() const;

  // Interpolates the exact fields into all seven spaces.
  Eigen::VectorXd exact_state(const Spaces& spaces, double t) const;

private:
  explicit ManufacturedCase(bool steady) : steady_(steady) {}
  bool steady_;
  Params params_;
};

// Discrete H^{-1/2}(Sigma) surrogate: the gradient energy of the auxiliary
// Neumann problem -div grad psi = 0 in Omega_P, grad psi . n = e on Sigma,
// psi = 0 on Gamma_P, discretized with P1 on the porous mesh.
class MultiplierNorm {
public:
  explicit MultiplierNorm(const Mesh2D& mesh);

  // e = exact(x,t) - lambda_h(x).
  double error_norm(const FunctionSpace& lambda_space, const Eigen::VectorXd& lambda_h,
                    const ScalarFn& exact, double t) const;
  // e = a - b for two multiplier coefficient vectors on the same space.
  double diff_norm(const FunctionSpace& lambda_space, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& b) const;

private:
  double solve_energy(const Eigen::VectorXd& rhs) const;
  Eigen::VectorXd interface_load(const FunctionSpace& lambda_space,
                                 const Eigen::VectorXd& lambda_h, const ScalarFn& exact,
                                 double t) const;

  const Mesh2D* mesh_;
  FunctionSpace aux_space_;
  SparseMat stiffness_;
  ConstrainedOperator op_;
  Factorization lu_;
};

// Error row in the column order of the reporting tables:
// (u_f H1, p_S L2, u_r L2, p_P L2, y_s H1, u_s L2, lambda).
constexpr int kErrVars = 7;
extern const std::array<const char*, kErrVars> kErrNames;

struct ErrorRow {
  int level = 0;
  double h = 0.0;
  double tau = 0.0;
  long dofs = 0;
  std::array<double, kErrVars> err{};
};

struct ErrorReport {
  std::vector<ErrorRow> rows;
  // log2(e_{k-1}/e_k) for row k >= 1; NaN for the first row.
  double rate(int row, int var) const;
};

// Final-time error norms of a discrete state against the exact fields.
std::array<double, kErrVars> error_norms(const TransientState& state,
                                         const ManufacturedCase& mcase,
                                         const Spaces& spaces,
                                         const MultiplierNorm& mnorm);

// Observers shared by the studies: collects worst-case step diagnostics.
struct TransientMonitor {
  double max_conservation = 0.0;
  double max_kinematic = 0.0;
  double max_residual = 0.0;
  void absorb(const StepDiagnostics& d) {
    max_conservation = std::max(max_conservation, d.conservation_rel);
    max_kinematic = std::max(max_kinematic, d.kinematic_rel);
    max_residual = std::max(max_residual, d.residual_rel);
  }
};

// Spatial study on the stacked unit squares: tau = h^2 (rounded so that
// N tau = T exactly), final time T = 1, final-time-step errors per level.
ErrorReport spatial_convergence_study(int levels, TransientMonitor* monitor = nullptr);

// Temporal study on a fixed mesh (refined `mesh_level` times): cumulative
// errors sqrt(sum_n tau ||s_ref(t_n) - s_h^n||^2) against a reference
// transient computed on the same mesh with tau_ref = tau_min / 4.
ErrorReport temporal_convergence_study(int mesh_level, double tau0, int halvings,
                                       TransientMonitor* monitor = nullptr);

}  // namespace fpsi
