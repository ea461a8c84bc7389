#include "fpsi/system.hpp"

#include <cmath>

#include <Eigen/SparseLU>

#include "fpsi/errors.hpp"

namespace fpsi {

struct Factorization::Impl {
  Eigen::SparseLU<SparseMat, Eigen::COLAMDOrdering<int>> lu;
  SparseMat mat;
};

Factorization::Factorization(const SparseMat& mat) {
  require(mat.rows() == mat.cols(), ErrorCode::Argument, "matrix must be square");
  dim_ = mat.rows();
  // Structurally empty rows/columns give the clearest failure report.
  std::vector<char> row_seen(mat.rows(), 0), col_seen(mat.cols(), 0);
  for (int k = 0; k < mat.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(mat, k); it; ++it) {
      if (it.value() != 0.0) {
        row_seen[it.row()] = 1;
        col_seen[it.col()] = 1;
      }
    }
  }
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    require(row_seen[i] && col_seen[i], ErrorCode::SingularMatrix,
            "structurally singular matrix: empty row/column at index " + std::to_string(i));
  }
  auto impl = std::make_shared<Impl>();
  impl->mat = mat;
  impl->mat.makeCompressed();
  impl->lu.analyzePattern(impl->mat);
  impl->lu.factorize(impl->mat);
  if (impl->lu.info() != Eigen::Success) {
    fail(ErrorCode::SingularMatrix,
         "sparse LU factorization failed: " + impl->lu.lastErrorMessage());
  }
  impl_ = std::move(impl);
}

Eigen::VectorXd Factorization::solve(const Eigen::VectorXd& rhs) const {
  require(rhs.size() == dim_, ErrorCode::Argument, "rhs size mismatch");
  Eigen::VectorXd x = impl_->lu.solve(rhs);
  // One step of iterative refinement keeps the forward error near roundoff,
  // which the kinematic identity divides by the time step.
  x += impl_->lu.solve(Eigen::VectorXd(rhs - impl_->mat * x));
  require(x.allFinite(), ErrorCode::Numeric, "non-finite solution from sparse solve");
  return x;
}

Factorization factorize(const SparseMat& mat) { return Factorization(mat); }

TimeStepper::TimeStepper(const CoupledSystem& sys, std::vector<GlobalBC> bcs, double tau,
                         LoadFn load_at)
    : spaces_(sys.spaces),
      tau_(tau),
      load_at_(std::move(load_at)),
      bcs_(std::move(bcs)),
      E_(sys.E.flatten()),
      op_(constrain_operator(SparseMat(E_ * (1.0 / tau) + sys.H.flatten()),
                             global_bc_dofs(sys.spaces, bcs_))),
      lu_(op_.matrix),
      off_(sys.spaces.offsets()) {
  require(tau > 0.0, ErrorCode::Argument, "time step must be positive");
  // Multiplier rows of H: H[lm][uf] = -G_f, H[lm][ur] = -G_p; E[lm][ys] = -G_s.
  gam_f_ = -sys.H.block[kLm][kUf];
  gam_p_ = -sys.H.block[kLm][kUr];
  gam_s_ = -sys.E.block[kLm][kYs];
  mass_us_ = assemble_weighted_mass(*spaces_.us, *spaces_.us,
                                    NodalField::constant(spaces_.us->mesh(), 1.0),
                                    kVolumeOrderConstant);
}

TransientState TimeStepper::step(const TransientState& prev, StepDiagnostics* diag) const {
  const double tn = prev.t + tau_;
  const Eigen::VectorXd load = load_at_(tn);
  Eigen::VectorXd rhs = load + E_ * (prev.X / tau_);
  const auto values = global_bc_values(spaces_, bcs_, tn);
  apply_constraints_rhs(op_, values, rhs);

  TransientState next;
  next.t = tn;
  next.step_index = prev.step_index + 1;
  next.X = lu_.solve(rhs);
  require(next.X.allFinite(), ErrorCode::Numeric,
          "NaN in transient solution at step " + std::to_string(next.step_index));

  if (diag) {
    const double rhs_norm = rhs.norm();
    diag->residual_rel = (op_.matrix * next.X - rhs).norm() / (rhs_norm > 0 ? rhs_norm : 1.0);

    const Eigen::VectorXd uf = field_part(spaces_, next.X, kUf);
    const Eigen::VectorXd ur = field_part(spaces_, next.X, kUr);
    const Eigen::VectorXd dys =
        (field_part(spaces_, next.X, kYs) - field_part(spaces_, prev.X, kYs)) / tau_;
    // Multiplier-row residual: the lambda equation reads -b_Gamma = load_lm
    // (load_lm is nonzero only under interface corrections).
    Eigen::VectorXd cons = gam_f_ * uf + gam_p_ * ur + gam_s_ * dys;
    cons += load.segment(off_[kLm], spaces_.lm->dim());
    const double xn = next.X.norm();
    diag->conservation_rel = cons.cwiseAbs().maxCoeff() / (xn > 0 ? xn : 1.0);

    const Eigen::VectorXd us = field_part(spaces_, next.X, kUs);
    const Eigen::VectorXd kin = us - dys;
    const double us_norm = std::sqrt(us.dot(mass_us_ * us));
    diag->kinematic_rel =
        std::sqrt(kin.dot(mass_us_ * kin)) / (us_norm > 0 ? us_norm : 1.0);
  }
  return next;
}

std::vector<TransientState> run_transient(
    const TimeStepper& stepper, const TransientState& initial, int steps,
    const std::function<void(const TransientState&, const StepDiagnostics&)>& hook) {
  require(steps >= 1, ErrorCode::Argument, "step count must be >= 1");
  std::vector<TransientState> out;
  out.reserve(steps + 1);
  out.push_back(initial);
  for (int n = 0; n < steps; ++n) {
    StepDiagnostics diag;
    out.push_back(stepper.step(out.back(), hook ? &diag : nullptr));
    if (hook) hook(out.back(), diag);
  }
  return out;
}

Eigen::VectorXd field_part(const Spaces& spaces, const Eigen::VectorXd& X, Field f) {
  const auto off = spaces.offsets();
  return X.segment(off[f], spaces[f]->dim());
}

void set_field_part(const Spaces& spaces, Eigen::VectorXd& X, Field f,
                    const Eigen::VectorXd& values) {
  const auto off = spaces.offsets();
  require(values.size() == spaces[f]->dim(), ErrorCode::Argument, "field size mismatch");
  X.segment(off[f], spaces[f]->dim()) = values;
}

double discrete_energy(const TransientState& state, const MaterialFields& materials,
                       const Spaces& spaces) {
  const Mesh2D& mesh = spaces.ur->mesh();
  const Eigen::VectorXd ur = field_part(spaces, state.X, kUr);
  const Eigen::VectorXd ys = field_part(spaces, state.X, kYs);
  const Eigen::VectorXd us = field_part(spaces, state.X, kUs);
  const Eigen::VectorXd pp = field_part(spaces, state.X, kPp);
  require(state.X.allFinite(), ErrorCode::Numeric, "non-finite state");

  const auto& rule = triangle_rule(kVolumeOrderVariable);
  const FunctionSpace& Vr = *spaces.ur;
  const FunctionSpace& Vs = *spaces.ys;
  const FunctionSpace& Ws = *spaces.us;
  const FunctionSpace& Wp = *spaces.pp;

  double energy = 0.0;
  double N2[6], N1[3];
  Vec2 G[6];
  for (size_t c = 0; c < Vr.cells().size(); ++c) {
    const int t = Vr.cells()[c];
    const auto& tri = mesh.triangles()[t];
    const Vec2 a = mesh.vertices()[tri[0]];
    const Vec2 b = mesh.vertices()[tri[1]];
    const Vec2 d = mesh.vertices()[tri[2]];
    const Vec2 d1 = b - a, d2 = d - a;
    const double detj = cross(d1, d2);
    const double i11 = d2.y / detj, i12 = -d2.x / detj;
    const double i21 = -d1.y / detj, i22 = d1.x / detj;
    const int cs = Vs.cell_pos_of_triangle(t);
    const int cw = Ws.cell_pos_of_triangle(t);
    const int cp = Wp.cell_pos_of_triangle(t);
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const auto& p = rule.points[q];
      const double w = rule.weights[q] * detj;
      FunctionSpace::shape_tri(Family::P2, p.l1, p.l2, N2);
      FunctionSpace::shape_tri(Family::P1, p.l1, p.l2, N1);
      FunctionSpace::shape_tri_grad(Family::P2, p.l1, p.l2, G);
      for (int i = 0; i < 6; ++i)
        G[i] = {i11 * G[i].x + i21 * G[i].y, i12 * G[i].x + i22 * G[i].y};

      Vec2 v_ur, v_us;
      Mat2 g_ys;
      for (int i = 0; i < 6; ++i) {
        v_ur += Vec2{ur[Vr.cell_dof(static_cast<int>(c), i, 0)],
                     ur[Vr.cell_dof(static_cast<int>(c), i, 1)]} * N2[i];
        v_us += Vec2{us[Ws.cell_dof(cw, i, 0)], us[Ws.cell_dof(cw, i, 1)]} * N2[i];
        const double yx = ys[Vs.cell_dof(cs, i, 0)];
        const double yy = ys[Vs.cell_dof(cs, i, 1)];
        g_ys.a11 += yx * G[i].x;
        g_ys.a12 += yx * G[i].y;
        g_ys.a21 += yy * G[i].x;
        g_ys.a22 += yy * G[i].y;
      }
      double v_pp = 0.0;
      for (int i = 0; i < 3; ++i) v_pp += pp[Wp.cell_dof(cp, i, 0)] * N1[i];

      const double phiq = materials.phi.value(mesh, t, p.l1, p.l2);
      const double rs = materials.rho_s.value(mesh, t, p.l1, p.l2);
      const double Kq = materials.K_bulk.value(mesh, t, p.l1, p.l2);
      const double mup = materials.mu_p.value(mesh, t, p.l1, p.l2);
      const double lap = materials.lambda_p.value(mesh, t, p.l1, p.l2);
      const Mat2 eps = sym(g_ys);
      const double eps2 = eps.a11 * eps.a11 + 2.0 * eps.a12 * eps.a12 + eps.a22 * eps.a22;
      const Vec2 sum = v_us + v_ur;
      energy += 0.5 * w *
                (rs * (1.0 - phiq) * dot(v_us, v_us) +
                 (1.0 - phiq) * (1.0 - phiq) / Kq * v_pp * v_pp + 2.0 * mup * eps2 +
                 lap * g_ys.trace() * g_ys.trace() + materials.rho_f * phiq * dot(sum, sum));
    }
  }
  return energy;
}

}  // namespace fpsi
