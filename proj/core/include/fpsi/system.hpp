#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/SparseCore>

#include "fpsi/assembly.hpp"

namespace fpsi {

// Exact sparse LU with partial pivoting; reusable across time steps while the
// matrix is unchanged.
class Factorization {
public:
  explicit Factorization(const SparseMat& mat);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::Index dim() const { return dim_; }

private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  Eigen::Index dim_ = 0;
};

Factorization factorize(const SparseMat& mat);

struct TransientState {
  double t = 0.0;
  int step_index = 0;
  Eigen::VectorXd X;  // partitioned (u_f, u_r, y_s, u_s, p_S, p_P, lambda)
};

struct StepDiagnostics {
  double residual_rel = 0.0;      // ||L X - rhs|| / ||rhs||
  double conservation_rel = 0.0;  // max multiplier-row residual / ||X||
  double kinematic_rel = 0.0;     // ||u_s - d_tau y_s||_L2 / ||u_s||_L2
};

// Backward Euler stepping context over a fixed geometry: solves
// (E/tau + H) X^n = L(t_n) + (E/tau) X^{n-1} with time-evaluated essential
// data.
class TimeStepper {
public:
  using LoadFn = std::function<Eigen::VectorXd(double)>;

  TimeStepper(const CoupledSystem& sys, std::vector<GlobalBC> bcs, double tau,
              LoadFn load_at);

  double tau() const { return tau_; }
  const Spaces& spaces() const { return spaces_; }

  TransientState step(const TransientState& prev, StepDiagnostics* diag = nullptr) const;

private:
  Spaces spaces_;
  double tau_;
  LoadFn load_at_;
  std::vector<GlobalBC> bcs_;
  SparseMat E_;             // unconstrained, for the history term
  ConstrainedOperator op_;  // E/tau + H with Dirichlet rows eliminated
  Factorization lu_;
  // Multiplier-row blocks for the conservation check and the us-mass for the
  // kinematic check.
  SparseMat gam_f_, gam_p_, gam_s_;
  SparseMat mass_us_;
  std::array<int, kFieldCount + 1> off_;
};

// Runs N steps from `initial`; `hook` (optional) observes every accepted
// state. Throws Numeric on NaN.
std::vector<TransientState> run_transient(
    const TimeStepper& stepper, const TransientState& initial, int steps,
    const std::function<void(const TransientState&, const StepDiagnostics&)>& hook = {});

// Field slices of the global solution vector.
Eigen::VectorXd field_part(const Spaces& spaces, const Eigen::VectorXd& X, Field f);
void set_field_part(const Spaces& spaces, Eigen::VectorXd& X, Field f,
                    const Eigen::VectorXd& values);

// Discrete energy functional
//   1/2 [ rho_s(1-phi)||u_s||^2 + (1-phi)^2/K ||p_P||^2 + 2 mu_p ||eps(y_s)||^2
//         + lambda_p ||div y_s||^2 + rho_f phi ||u_s + u_r||^2 ].
double discrete_energy(const TransientState& state, const MaterialFields& materials,
                       const Spaces& spaces);

}  // namespace fpsi
