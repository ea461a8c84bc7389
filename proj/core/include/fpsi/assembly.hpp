#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/SparseCore>

#include "fpsi/fespace.hpp"
#include "fpsi/materials.hpp"
#include "fpsi/quadrature.hpp"

namespace fpsi {

using SparseMat = Eigen::SparseMatrix<double>;

// Unknown ordering of the coupled system.
enum Field : int { kUf = 0, kUr, kYs, kUs, kPs, kPp, kLm, kFieldCount };

struct Spaces {
  const FunctionSpace* uf = nullptr;  // Stokes velocity, vector P2
  const FunctionSpace* ur = nullptr;  // relative velocity, vector P2
  const FunctionSpace* ys = nullptr;  // solid displacement, vector P2
  const FunctionSpace* us = nullptr;  // solid velocity, vector P2
  const FunctionSpace* ps = nullptr;  // Stokes pressure, scalar P1
  const FunctionSpace* pp = nullptr;  // porous pressure, scalar P1
  const FunctionSpace* lm = nullptr;  // interface multiplier, scalar P1

  const FunctionSpace* operator[](int f) const {
    const FunctionSpace* all[kFieldCount] = {uf, ur, ys, us, ps, pp, lm};
    return all[f];
  }
  std::array<int, kFieldCount + 1> offsets() const;
  int total_dim() const { return offsets()[kFieldCount]; }
};

Spaces build_spaces_storage(const Mesh2D& mesh, std::vector<FunctionSpace>& storage);

// --- Volume forms -----------------------------------------------------------

// (2 mu eps(u), eps(v)) on the Stokes subdomain.
SparseMat assemble_stokes_viscous(const FunctionSpace& vf, double mu_f,
                                  int order = kVolumeOrderConstant);

// (2 mu_f phi eps(u), eps(v)) on the porous subdomain; rows from `rows`,
// columns from `cols` (both vector P2 on the same subdomain).
SparseMat assemble_brinkman_viscous(const FunctionSpace& rows, const FunctionSpace& cols,
                                    double mu_f, const NodalField& phi,
                                    int order = kVolumeOrderVariable);

// (2 mu_p eps(y), eps(w)) + (lambda_p div y, div w).
SparseMat assemble_elasticity(const FunctionSpace& vs, const NodalField& mu_p,
                              const NodalField& lambda_p,
                              int order = kVolumeOrderVariable);

// Rows Q, columns V, entries -(div(w v_j), q_i); the weight gradient
// contributes for non-constant w.
SparseMat assemble_divergence_coupling(const FunctionSpace& v, const FunctionSpace& q,
                                       const NodalField& weight,
                                       int order = kVolumeOrderVariable);

// (xi a, b) for same-subdomain spaces with equal component count.
SparseMat assemble_weighted_mass(const FunctionSpace& rows, const FunctionSpace& cols,
                                 const NodalField& xi, int order = kVolumeOrderVariable);

// Component-wise Laplace stiffness, entries delta_ab (grad phi_i, grad phi_j):
// harmonic extension, the multiplier-norm auxiliary problem, and H1 norms.
SparseMat assemble_component_laplacian(const FunctionSpace& space,
                                       int order = kVolumeOrderConstant);

// --- Interface forms --------------------------------------------------------

// Positive interface blocks of the slip-with-friction form, coefficient
// mu_f alpha sqrt(Z^-1) with Z = (kappa tau) . tau. The quadratic form of the
// coupled pairing is z^T [ff, -fs; -sf, ss] z >= 0.
struct BjsBlocks {
  SparseMat ff, fs, sf, ss;
};
BjsBlocks assemble_bjs(const FunctionSpace& vf, const FunctionSpace& vs, double mu_f,
                       double alpha_bjs, const NodalField& kappa,
                       int order = kEdgeOrderDefault);

// Multiplier coupling blocks; rows are multiplier dofs.
//   f: <v_f . n_S, mu>,  p: <v_r . n_P, mu>,  s: <w_s . n_P, mu>
struct InterfaceCoupling {
  SparseMat f, p, s;
};
InterfaceCoupling assemble_interface_coupling(const FunctionSpace& vf,
                                              const FunctionSpace& vr,
                                              const FunctionSpace& vs,
                                              const FunctionSpace& lambda,
                                              int order = kEdgeOrderDefault);

// --- Load functional --------------------------------------------------------

// Volume sources. The physical right-hand side rows are
//   (f_S, v_f), (rho_f phi f_P, v_r), (rho_p f_P, w_s), (r_S, q_S),
//   (theta/rho_f, q_P);
// the momentum/mass overrides replace the porous rows wholesale (used by the
// manufactured-solution synthesis).
struct SourceSet {
  VectorFn f_S;
  VectorFn f_P;
  ScalarFn r_S;
  ScalarFn theta_source;  // defaults to materials.theta / rho_f when null

  VectorFn override_mom_r;  // replaces (rho_f phi f_P, v_r)
  VectorFn override_mom_s;  // replaces (rho_p f_P, w_s)
  ScalarFn override_mass_p; // replaces (theta/rho_f, q_P)
};

// Interface residual corrections; m3 is vector-valued.
struct InterfaceCorrections {
  ScalarFn m1, m2, m4, m5;
  VectorFn m3;
};

Eigen::VectorXd assemble_load(const Spaces& spaces, const MaterialFields& materials,
                              const SourceSet& sources,
                              const InterfaceCorrections* corrections, double t);

// Adds int_marker g(t) . v ds over marked boundary edges into the rows of the
// given vector field (natural traction data).
void add_traction_load(Eigen::VectorXd& load, const Spaces& spaces, Field field,
                       const std::vector<int>& markers,
                       const std::function<Vec2(Vec2, Vec2, double)>& traction,
                       double t);

// --- Coupled block system ---------------------------------------------------

// 7x7 grid of sparse blocks matching the time-derivative matrix E and the
// stiffness matrix H of the coupled scheme. Structurally zero blocks stay
// empty.
struct BlockMatrix {
  std::array<int, kFieldCount + 1> offsets{};
  std::array<std::array<SparseMat, kFieldCount>, kFieldCount> block{};

  bool empty(int r, int c) const { return block[r][c].nonZeros() == 0; }
  SparseMat flatten() const;
};

struct CoupledSystem {
  Spaces spaces;
  BlockMatrix E;  // multiplies d/dt X
  BlockMatrix H;  // multiplies X
  Eigen::VectorXd load;  // L(t) at assembly time
  int dim = 0;
};

CoupledSystem assemble_system(const Mesh2D& mesh, const Spaces& spaces,
                              const MaterialFields& materials, double t,
                              const SourceSet& sources = {},
                              const InterfaceCorrections* corrections = nullptr);

// Symmetric Dirichlet elimination on a flattened matrix: constrained rows and
// columns are zeroed with a unit diagonal. Returns the column slice needed to
// lift time-dependent boundary values into the right-hand side.
struct ConstrainedOperator {
  SparseMat matrix;            // eliminated operator
  SparseMat full;              // original operator (for lifting)
  std::vector<int> dofs;       // constrained global dofs, sorted
  std::vector<char> is_constrained;
};

ConstrainedOperator constrain_operator(const SparseMat& mat,
                                       const std::vector<int>& constrained_dofs);

// Applies constrained values g to a right-hand side: rhs -= full[:,c] g_c on
// free rows, rhs[c] = g_c.
void apply_constraints_rhs(const ConstrainedOperator& op,
                           const std::vector<std::pair<int, double>>& values,
                           Eigen::VectorXd& rhs);

// Spec-level operation: eliminate a BC list on a coupled system at time t.
// Throws BcConflict when two sets prescribe different values on one dof.
struct GlobalBC {
  Field field;
  BCSet bc;
};
std::vector<std::pair<int, double>> global_bc_values(const Spaces& spaces,
                                                     const std::vector<GlobalBC>& bcs,
                                                     double t);
std::vector<int> global_bc_dofs(const Spaces& spaces, const std::vector<GlobalBC>& bcs);

}  // namespace fpsi
