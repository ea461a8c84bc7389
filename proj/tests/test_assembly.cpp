#include <cmath>

#include <Eigen/Dense>

#include "doctest.h"
#include "fpsi/assembly.hpp"
#include "fpsi/errors.hpp"
#include "fpsi/system.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace fpsi;

namespace {

Eigen::MatrixXd dense(const SparseMat& m) { return Eigen::MatrixXd(m); }

double sym_error(const Eigen::MatrixXd& a) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

TEST_CASE("P1 stiffness on the reference triangle matches the symbolic oracle") {
  const Mesh2D m = testutil::reference_triangle();
  const FunctionSpace p1(m, Subdomain::Stokes, Family::P1, 1);
  const Eigen::MatrixXd K = dense(assemble_component_laplacian(p1));

  const auto basis = oracle::p1_basis();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double exact = (basis[i].dx() * basis[j].dx() + basis[i].dy() * basis[j].dy())
                               .integrate_ref_triangle();
      CHECK(K(i, j) == doctest::Approx(exact).epsilon(1e-12));
    }
  }
  // Frozen closed form of the same matrix.
  const double expect[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(K(i, j) == doctest::Approx(expect[i][j]));
}

TEST_CASE("P1 and P2 mass matrices match the symbolic oracle") {
  const Mesh2D m = testutil::reference_triangle();
  const NodalField one = NodalField::constant(m, 1.0);

  const FunctionSpace p1(m, Subdomain::Stokes, Family::P1, 1);
  const Eigen::MatrixXd m1 = dense(assemble_weighted_mass(p1, p1, one));
  const auto b1 = oracle::p1_basis();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(m1(i, j) ==
            doctest::Approx((b1[i] * b1[j]).integrate_ref_triangle()).epsilon(1e-12));
  CHECK(m1(0, 0) == doctest::Approx(2.0 / 24.0));
  CHECK(m1(0, 1) == doctest::Approx(1.0 / 24.0));

  const FunctionSpace p2(m, Subdomain::Stokes, Family::P2, 1);
  const Eigen::MatrixXd m2 = dense(assemble_weighted_mass(p2, p2, one));
  const auto b2 = oracle::p2_basis();
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      CHECK(m2(i, j) ==
            doctest::Approx((b2[i] * b2[j]).integrate_ref_triangle()).epsilon(1e-12));
}

TEST_CASE("weighted divergence block on the reference triangle vs oracle") {
  const Mesh2D m = testutil::reference_triangle();
  const FunctionSpace v(m, Subdomain::Stokes, Family::P2, 2);
  const FunctionSpace q(m, Subdomain::Stokes, Family::P1, 1);

  SUBCASE("unit weight") {
    const Eigen::MatrixXd B = dense(assemble_divergence_coupling(v, q, NodalField::constant(m, 1.0)));
    const auto bq = oracle::p1_basis();
    const auto bv = oracle::p2_basis();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 6; ++j) {
        const double bx = (bq[i] * bv[j].dx() * -1.0).integrate_ref_triangle();
        const double by = (bq[i] * bv[j].dy() * -1.0).integrate_ref_triangle();
        CHECK(B(i, 2 * j) == doctest::Approx(bx).epsilon(1e-12));
        CHECK(B(i, 2 * j + 1) == doctest::Approx(by).epsilon(1e-12));
      }
    }
  }
  SUBCASE("P1 weight w = x includes the gradient contribution") {
    std::vector<double> wv = {0.0, 1.0, 0.0};  // nodal x on the reference triangle
    const NodalField w(m, wv);
    const Eigen::MatrixXd B = dense(assemble_divergence_coupling(v, q, w));
    const auto bq = oracle::p1_basis();
    const auto bv = oracle::p2_basis();
    const oracle::Poly2 wx = oracle::Poly2::mono(1, 0, 1.0);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 6; ++j) {
        const double bx = (bq[i] * (wx * bv[j]).dx() * -1.0).integrate_ref_triangle();
        const double by = (bq[i] * (wx * bv[j]).dy() * -1.0).integrate_ref_triangle();
        CHECK(B(i, 2 * j) == doctest::Approx(bx).epsilon(1e-12));
        CHECK(B(i, 2 * j + 1) == doctest::Approx(by).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("divergence coupling recovers -(div v, q) on a physical block") {
  const Mesh2D m = testutil::stacked_squares(2, 2);
  const FunctionSpace v(m, Subdomain::Stokes, Family::P2, 2);
  const FunctionSpace q(m, Subdomain::Stokes, Family::P1, 1);
  const SparseMat B = assemble_divergence_coupling(v, q, NodalField::constant(m, 1.0));
  const auto vx = v.interpolate([](Vec2 x, double) { return Vec2{x.x, 0.0}; }, 0.0);
  const auto q1 = q.interpolate([](Vec2, double) { return 1.0; }, 0.0);
  // -(div v, 1) over the unit Stokes square with div v = 1.
  CHECK(q1.dot(B * vx) == doctest::Approx(-1.0).epsilon(1e-13));

  const NodalField wx(m, [&] {
    std::vector<double> vals(m.vertex_count());
    for (int i = 0; i < m.vertex_count(); ++i) vals[i] = m.vertices()[i].x;
    return vals;
  }());
  const SparseMat Bw = assemble_divergence_coupling(v, q, wx);
  const auto e1 = v.interpolate([](Vec2, double) { return Vec2{1.0, 0.0}; }, 0.0);
  // -(d/dx(x*1), 1) = -area.
  CHECK(q1.dot(Bw * e1) == doctest::Approx(-1.0).epsilon(1e-13));
  // Constant weight is pure scaling.
  const SparseMat B01 = assemble_divergence_coupling(v, q, NodalField::constant(m, 0.1));
  CHECK((dense(B01) - 0.1 * dense(B)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("viscous energies on simple fields") {
  const Mesh2D m = testutil::stacked_squares(2, 2);

  SUBCASE("Stokes: rigid translations in the kernel, shear energy exact") {
    const FunctionSpace v(m, Subdomain::Stokes, Family::P2, 2);
    const SparseMat A = assemble_stokes_viscous(v, 10.0);
    CHECK(sym_error(dense(A)) < 1e-13);
    const auto rigid = v.interpolate([](Vec2, double) { return Vec2{0.3, -1.2}; }, 0.0);
    CHECK((A * rigid).cwiseAbs().maxCoeff() < 1e-12);
    // u = (x,-y): eps = diag(1,-1), energy 2 mu |eps|^2 |Omega| = 40.
    const auto u = v.interpolate([](Vec2 x, double) { return Vec2{x.x, -x.y}; }, 0.0);
    CHECK(u.dot(A * u) == doctest::Approx(40.0).epsilon(1e-12));
  }
  SUBCASE("Brinkman: zero and constant porosity scaling") {
    const FunctionSpace v(m, Subdomain::Porous, Family::P2, 2);
    const SparseMat A0 = assemble_brinkman_viscous(v, v, 1.0, NodalField::constant(m, 0.0));
    CHECK(dense(A0).cwiseAbs().maxCoeff() == 0.0);
    const SparseMat A1 = assemble_brinkman_viscous(v, v, 1.0, NodalField::constant(m, 1.0));
    const SparseMat A01 = assemble_brinkman_viscous(v, v, 1.0, NodalField::constant(m, 0.1));
    CHECK((dense(A01) - 0.1 * dense(A1)).cwiseAbs().maxCoeff() < 1e-13);
  }
  SUBCASE("spatially varying porosity stays symmetric positive semidefinite") {
    const FunctionSpace v(m, Subdomain::Porous, Family::P2, 2);
    std::vector<double> pv(m.vertex_count());
    for (int i = 0; i < m.vertex_count(); ++i)
      pv[i] = 0.2 + 0.1 * std::sin(3.0 * m.vertices()[i].x + m.vertices()[i].y);
    const SparseMat A = assemble_brinkman_viscous(v, v, 1.0, NodalField(m, pv));
    const Eigen::MatrixXd Ad = dense(A);
    CHECK(sym_error(Ad) < 1e-13);
    const Eigen::MatrixXd sub = Ad.topLeftCorner(50, 50);
    Eigen::LLT<Eigen::MatrixXd> llt(sub + 1e-12 * Eigen::MatrixXd::Identity(50, 50));
    CHECK(llt.info() == Eigen::Success);
  }
}

TEST_CASE("elasticity energies on simple fields") {
  const Mesh2D m = testutil::stacked_squares(2, 2);
  const FunctionSpace v(m, Subdomain::Porous, Family::P2, 2);

  SUBCASE("rigid translation in the kernel") {
    const SparseMat A =
        assemble_elasticity(v, NodalField::constant(m, 3.0), NodalField::constant(m, 2.0));
    const auto rigid = v.interpolate([](Vec2, double) { return Vec2{1.0, 1.0}; }, 0.0);
    CHECK((A * rigid).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(sym_error(dense(A)) < 1e-13);
  }
  SUBCASE("pure shear with lambda = 0, mu = 1/2 gives energy 2 |Omega|") {
    const SparseMat A =
        assemble_elasticity(v, NodalField::constant(m, 0.5), NodalField::constant(m, 0.0));
    const auto u = v.interpolate([](Vec2 x, double) { return Vec2{x.y, x.x}; }, 0.0);
    CHECK(u.dot(A * u) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("dilation with unit coefficients gives energy 8 |Omega|") {
    const SparseMat A =
        assemble_elasticity(v, NodalField::constant(m, 1.0), NodalField::constant(m, 1.0));
    const auto u = v.interpolate([](Vec2 x, double) { return Vec2{x.x, x.y}; }, 0.0);
    CHECK(u.dot(A * u) == doctest::Approx(8.0).epsilon(1e-12));
  }
}

TEST_CASE("weighted mass instances") {
  const Mesh2D m = testutil::stacked_squares(2, 2);
  const FunctionSpace q(m, Subdomain::Porous, Family::P1, 1);
  const SparseMat M1 = assemble_weighted_mass(q, q, NodalField::constant(m, 1.0));

  // (1-phi)^2/K with phi = 0.1, K = 1 scales the unit mass by 0.81.
  const SparseMat M081 = assemble_weighted_mass(q, q, NodalField::constant(m, 0.81));
  CHECK((dense(M081) - 0.81 * dense(M1)).cwiseAbs().maxCoeff() < 1e-13);

  // theta = -0.01: negative semidefinite.
  const SparseMat Mth = assemble_weighted_mass(q, q, NodalField::constant(m, -0.01));
  const Eigen::VectorXd eig =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense(Mth)).eigenvalues();
  CHECK(eig.maxCoeff() <= 1e-15);
}

TEST_CASE("slip-with-friction interface blocks") {
  const Mesh2D m = testutil::verification_mesh(0);
  const FunctionSpace vf(m, Subdomain::Stokes, Family::P2, 2);
  const FunctionSpace vs(m, Subdomain::Porous, Family::P2, 2);
  const NodalField kappa = NodalField::constant(m, 1.0);
  const double mu_f = 10.0, alpha = 1.0;
  const BjsBlocks bjs = assemble_bjs(vf, vs, mu_f, alpha, kappa);

  auto quadratic_form = [&](const Eigen::VectorXd& uf, const Eigen::VectorXd& ws) {
    return uf.dot(bjs.ff * uf) - uf.dot(bjs.fs * ws) - ws.dot(bjs.sf * uf) +
           ws.dot(bjs.ss * ws);
  };

  SUBCASE("equal tangential traces have zero slip energy") {
    const auto uf = vf.interpolate([](Vec2 x, double) { return Vec2{x.x, 0.5}; }, 0.0);
    const auto ws = vs.interpolate([](Vec2 x, double) { return Vec2{x.x, -2.0}; }, 0.0);
    CHECK(std::abs(quadratic_form(uf, ws)) < 1e-13);
  }
  SUBCASE("alpha = 0 zeroes all four blocks") {
    const BjsBlocks z = assemble_bjs(vf, vs, mu_f, 0.0, kappa);
    CHECK(z.ff.nonZeros() + z.fs.nonZeros() + z.sf.nonZeros() + z.ss.nonZeros() == 0);
  }
  SUBCASE("unit tangential slip on the flat interface: energy mu_f alpha |Sigma|") {
    const auto uf = vf.interpolate([](Vec2, double) { return Vec2{1.0, 0.0}; }, 0.0);
    const Eigen::VectorXd ws = Eigen::VectorXd::Zero(vs.dim());
    CHECK(quadratic_form(uf, ws) == doctest::Approx(10.0).epsilon(1e-12));
  }
  SUBCASE("quadratic form equals independent edge quadrature for random fields") {
    oracle::Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      const double a0 = rng.uniform(-1, 1), a1 = rng.uniform(-1, 1), a2 = rng.uniform(-1, 1);
      const double b0 = rng.uniform(-1, 1), b1 = rng.uniform(-1, 1);
      auto fu = [=](Vec2 x, double) {
        return Vec2{a0 + a1 * x.x + a2 * x.x * x.x, a1 * x.y};
      };
      auto fw = [=](Vec2 x, double) { return Vec2{b0 + b1 * x.x * x.y, b0 * x.x}; };
      const auto uf = vf.interpolate(fu, 0.0);
      const auto ws = vs.interpolate(fw, 0.0);
      // Independent evaluation: P2 interpolants of the fields on the flat
      // interface y=1, tangent (1,0), integrated with a dense Gauss rule.
      double exact = 0.0;
      const auto& rule = edge_rule(8);
      for (const auto& e : m.interface().edges) {
        const Vec2 p0 = m.vertices()[e.v0], p1 = m.vertices()[e.v1];
        for (size_t qp = 0; qp < rule.points.size(); ++qp) {
          const Vec2 x = p0 + rule.points[qp] * (p1 - p0);
          // Interpolants agree with the functions at trace nodes; both f's
          // restricted to y=1 are quadratic in x, captured by P2 traces.
          const double slip = dot(fu(x, 0) - fw(x, 0), e.tangent);
          exact += rule.weights[qp] * e.length * mu_f * alpha * slip * slip;
        }
      }
      CHECK(quadratic_form(uf, ws) == doctest::Approx(exact).epsilon(1e-10));
    }
  }
  SUBCASE("nonpositive permeability on the interface is rejected") {
    CHECK_THROWS_AS(assemble_bjs(vf, vs, mu_f, alpha, NodalField::constant(m, -1.0)),
                    Error);
  }
}

TEST_CASE("multiplier coupling blocks") {
  const Mesh2D m = testutil::verification_mesh(0);
  const FunctionSpace vf(m, Subdomain::Stokes, Family::P2, 2);
  const FunctionSpace vr(m, Subdomain::Porous, Family::P2, 2);
  const FunctionSpace vs(m, Subdomain::Porous, Family::P2, 2);
  const FunctionSpace lam(m, Subdomain::Interface, Family::P1, 1);
  const InterfaceCoupling g = assemble_interface_coupling(vf, vr, vs, lam);

  SUBCASE("unit normal velocity against mu = 1 integrates to |Sigma|") {
    // v_f . n_S = 1 on the flat interface with n_S = (0,1).
    const auto uf = vf.interpolate([](Vec2, double) { return Vec2{0.0, 1.0}; }, 0.0);
    const Eigen::VectorXd mu = Eigen::VectorXd::Ones(lam.dim());
    CHECK(mu.dot(g.f * uf) == doctest::Approx(1.0).epsilon(1e-13));
  }
  SUBCASE("telescoping normals: u_f.n_S = 1, u_r.n_P = -1 cancels") {
    const auto uf = vf.interpolate([](Vec2, double) { return Vec2{0.0, 1.0}; }, 0.0);
    const auto ur = vr.interpolate([](Vec2, double) { return Vec2{0.0, 1.0}; }, 0.0);
    const Eigen::VectorXd total = g.f * uf + g.p * ur;
    CHECK(total.cwiseAbs().maxCoeff() < 1e-13);
  }
  SUBCASE("assembled b_Gamma equals direct edge quadrature for random traces") {
    oracle::Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
      const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), c = rng.uniform(-1, 1);
      auto f_uf = [=](Vec2 x, double) { return Vec2{0.3 * x.y, a + b * x.x}; };
      auto f_ur = [=](Vec2 x, double) { return Vec2{x.x, c * x.x * x.x}; };
      auto f_ws = [=](Vec2 x, double) { return Vec2{0.0, a * x.x - c}; };
      auto f_mu = [=](Vec2 x, double) { return b + c * x.x; };
      const auto uf = vf.interpolate(f_uf, 0.0);
      const auto ur = vr.interpolate(f_ur, 0.0);
      const auto ws = vs.interpolate(f_ws, 0.0);
      const auto mu = lam.interpolate(f_mu, 0.0);
      const double assembled = mu.dot(g.f * uf + g.p * ur + g.s * ws);
      double exact = 0.0;
      const auto& rule = edge_rule(8);
      for (const auto& e : m.interface().edges) {
        const Vec2 p0 = m.vertices()[e.v0], p1 = m.vertices()[e.v1];
        const Vec2 n_p = e.normal_p, n_s = n_p * -1.0;
        for (size_t qp = 0; qp < rule.points.size(); ++qp) {
          const Vec2 x = p0 + rule.points[qp] * (p1 - p0);
          const double val = dot(f_uf(x, 0), n_s) + dot(f_ur(x, 0) + f_ws(x, 0), n_p);
          exact += rule.weights[qp] * e.length * val * f_mu(x, 0);
        }
      }
      CHECK(assembled == doctest::Approx(exact).epsilon(1e-11));
    }
  }
}

TEST_CASE("load functional rows") {
  const Mesh2D m = testutil::stacked_squares(2, 2);
  std::vector<FunctionSpace> storage;
  const Spaces sp = build_spaces_storage(m, storage);
  MaterialFields::Constants c;
  c.phi = 0.1;
  c.kappa = 1.0;
  const MaterialFields mats = MaterialFields::uniform(m, c);

  SUBCASE("zero sources give the zero vector") {
    MaterialFields noth = mats;
    noth.theta = 0.0;
    const Eigen::VectorXd load = assemble_load(sp, noth, {}, nullptr, 0.0);
    CHECK(load.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("r_S = 1 against q = 1 integrates to the Stokes area") {
    SourceSet s;
    s.r_S = [](Vec2, double) { return 1.0; };
    const Eigen::VectorXd load = assemble_load(sp, mats, s, nullptr, 0.0);
    const auto off = sp.offsets();
    double sum = 0.0;
    for (int i = 0; i < sp.ps->dim(); ++i) sum += load[off[kPs] + i];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("coupled system block pattern matches the scheme matrices") {
  const Mesh2D m = testutil::verification_mesh(0);
  std::vector<FunctionSpace> storage;
  const Spaces sp = build_spaces_storage(m, storage);
  MaterialFields::Constants c;
  c.mu_f = 10.0;
  c.alpha_bjs = 1.0;
  c.theta = -0.01;
  c.phi = 0.1;
  const MaterialFields mats = MaterialFields::uniform(m, c);
  const CoupledSystem sys = assemble_system(m, sp, mats, 0.0);

  const bool expect_E[7][7] = {
      {0, 0, 1, 0, 0, 0, 0}, {0, 1, 1, 1, 0, 0, 0}, {0, 1, 1, 1, 0, 0, 0},
      {0, 0, 1, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0, 0}, {0, 0, 1, 0, 0, 1, 0},
      {0, 0, 1, 0, 0, 0, 0}};
  const bool expect_H[7][7] = {
      {1, 0, 0, 0, 1, 0, 1}, {0, 1, 0, 0, 0, 1, 1}, {1, 1, 1, 0, 0, 1, 1},
      {0, 0, 0, 1, 0, 0, 0}, {1, 0, 0, 0, 0, 0, 0}, {0, 1, 0, 0, 0, 0, 0},
      {1, 1, 0, 0, 0, 0, 0}};
  for (int r = 0; r < kFieldCount; ++r) {
    for (int col = 0; col < kFieldCount; ++col) {
      INFO("block (", r, ",", col, ")");
      CHECK(sys.E.empty(r, col) == !expect_E[r][col]);
      CHECK(sys.H.empty(r, col) == !expect_H[r][col]);
    }
  }

  SUBCASE("pressure-velocity pairing is skew") {
    const Eigen::MatrixXd bt = dense(sys.H.block[kUf][kPs]);
    const Eigen::MatrixXd b = dense(sys.H.block[kPs][kUf]);
    CHECK((bt + b.transpose()).cwiseAbs().maxCoeff() < 1e-13);
  }
  SUBCASE("storage block equals the weighted mass") {
    const SparseMat ms =
        assemble_weighted_mass(*sp.pp, *sp.pp, mats.weight_storage(m));
    CHECK((dense(sys.E.block[kPp][kPp]) - dense(ms)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("mass sub-blocks of E are symmetric pairings") {
    // With constant phi the (u_r,u_s) and (y_s,u_r) masses share the weight.
    const Eigen::MatrixXd e12 = dense(sys.E.block[kUr][kUs]);
    const Eigen::MatrixXd e21 = dense(sys.E.block[kYs][kUr]);
    CHECK((e12 - e21.transpose()).cwiseAbs().maxCoeff() < 1e-13);
  }
  SUBCASE("space/mesh mismatch is rejected") {
    const Mesh2D other = testutil::stacked_squares();
    CHECK_THROWS_AS(assemble_system(other, sp, mats, 0.0), Error);
  }
}

TEST_CASE("symmetric dirichlet elimination") {
  const Mesh2D m = testutil::stacked_squares(2, 2);
  const FunctionSpace p1(m, Subdomain::Porous, Family::P1, 1);
  const SparseMat K = assemble_component_laplacian(p1);

  SUBCASE("homogeneous values keep the free right-hand side untouched") {
    const ConstrainedOperator op = constrain_operator(K, {0, 1});
    Eigen::VectorXd rhs = Eigen::VectorXd::Ones(p1.dim());
    apply_constraints_rhs(op, {{0, 0.0}, {1, 0.0}}, rhs);
    CHECK(rhs[0] == 0.0);
    CHECK(rhs[1] == 0.0);
    for (int i = 2; i < rhs.size(); ++i) CHECK(rhs[i] == 1.0);
  }
  SUBCASE("Poisson patch test reproduces a linear exact solution") {
    // Dirichlet on the full porous boundary, interface included.
    std::vector<int> bdofs;
    for (const auto& be : m.boundary_edges()) {
      for (int n : p1.nodes_on_edge(be)) bdofs.push_back(n);
    }
    auto exact = [](Vec2 x) { return 2.0 * x.x - 3.0 * x.y + 1.0; };
    const ConstrainedOperator op = constrain_operator(K, bdofs);
    std::vector<std::pair<int, double>> values;
    for (int d : op.dofs) values.emplace_back(d, exact(p1.dof_coord(d)));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p1.dim());
    apply_constraints_rhs(op, values, rhs);
    const Eigen::VectorXd sol = factorize(op.matrix).solve(rhs);
    for (int n = 0; n < p1.node_count(); ++n)
      CHECK(sol[n] == doctest::Approx(exact(p1.node_coords()[n])).epsilon(1e-12));
  }
  SUBCASE("conflicting prescribed values raise BcConflict") {
    std::vector<FunctionSpace> storage;
    const Spaces sp = build_spaces_storage(m, storage);
    BCSet a, b;
    a.space = sp.uf;
    a.dofs = {5};
    a.coords = {{0, 0}};
    a.comps = {1};
    a.value = [](Vec2, int, double) { return 0.0; };
    b = a;
    b.value = [](Vec2, int, double) { return 1.0; };
    try {
      global_bc_values(sp, {{kUf, a}, {kUf, b}}, 0.0);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BcConflict);
    }
  }
}
