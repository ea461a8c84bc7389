#include "fpsi/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fpsi/errors.hpp"

namespace fpsi {

namespace {

int assembly_threads() {
#ifdef _OPENMP
  if (const char* env = std::getenv("SOLVER_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return std::min(n, omp_get_max_threads());
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

struct Entry {
  int row;
  int col;
  long elem;
  double value;
};

// Element loop with per-worker buffers merged deterministically: entries are
// sorted by (row, col, elem) before compression, so the floating-point
// summation order does not depend on the thread count.
SparseMat assemble_cells(int nrows, int ncols, int ncells,
                         const std::function<void(int, std::vector<Entry>&)>& kernel) {
  const int nthreads = std::max(1, std::min(assembly_threads(), std::max(1, ncells)));
  std::vector<std::vector<Entry>> bufs(nthreads);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nthreads)
#endif
  for (int c = 0; c < ncells; ++c) {
#ifdef _OPENMP
    auto& buf = bufs[omp_get_thread_num()];
#else
    auto& buf = bufs[0];
#endif
    kernel(c, buf);
  }
  std::vector<Entry> all;
  size_t total = 0;
  for (const auto& b : bufs) total += b.size();
  all.reserve(total);
  for (auto& b : bufs) all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
    if (a.row != b.row) return a.row < b.row;
    if (a.col != b.col) return a.col < b.col;
    return a.elem < b.elem;
  });
  SparseMat m(nrows, ncols);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(all.size());
  for (const auto& e : all) trip.emplace_back(e.row, e.col, e.value);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

struct CellGeometry {
  Vec2 grads[6];   // physical gradients at one quadrature point
  double detj = 0.0;

  void gradients(const Mesh2D& mesh, int t, Family fam, double l1, double l2) {
    const auto& tri = mesh.triangles()[t];
    const Vec2 a = mesh.vertices()[tri[0]];
    const Vec2 b = mesh.vertices()[tri[1]];
    const Vec2 c = mesh.vertices()[tri[2]];
    const Vec2 d1 = b - a, d2 = c - a;
    detj = cross(d1, d2);
    Vec2 gref[6];
    FunctionSpace::shape_tri_grad(fam, l1, l2, gref);
    // J^{-T} applied to reference gradients.
    const double i11 = d2.y / detj, i12 = -d2.x / detj;
    const double i21 = -d1.y / detj, i22 = d1.x / detj;
    const int n = FunctionSpace::tri_node_count(fam);
    for (int i = 0; i < n; ++i)
      grads[i] = {i11 * gref[i].x + i21 * gref[i].y, i12 * gref[i].x + i22 * gref[i].y};
  }
};

Vec2 physical_point(const Mesh2D& mesh, int t, double l1, double l2) {
  const auto& tri = mesh.triangles()[t];
  return mesh.vertices()[tri[0]] * (1.0 - l1 - l2) + mesh.vertices()[tri[1]] * l1 +
         mesh.vertices()[tri[2]] * l2;
}

// Barycentric (l1,l2) of a point in a triangle; the caller guarantees
// membership up to roundoff.
void tri_barycentric(const Mesh2D& mesh, int t, Vec2 x, double* l1, double* l2) {
  const auto& tri = mesh.triangles()[t];
  const Vec2 a = mesh.vertices()[tri[0]];
  const Vec2 b = mesh.vertices()[tri[1]];
  const Vec2 c = mesh.vertices()[tri[2]];
  const double det = cross(b - a, c - a);
  *l1 = cross(x - a, c - a) / det;
  *l2 = cross(b - a, x - a) / det;
}

// Strain-product kernel shared by the viscous and elastic forms:
//   (2 eps(phi_j e_b), eps(phi_i e_a)) = delta_ab gi.gj + gj[a] gi[b].
inline double strain_product(Vec2 gi, Vec2 gj, int a, int b) {
  double v = gj[a] * gi[b];
  if (a == b) v += dot(gi, gj);
  return v;
}

SparseMat assemble_vector_strain_form(const FunctionSpace& rows, const FunctionSpace& cols,
                                      const std::function<double(int, double, double)>& mu_at,
                                      const NodalField* lambda, int order) {
  require(rows.components() == 2 && cols.components() == 2, ErrorCode::Argument,
          "strain forms need vector spaces");
  require(rows.cells() == cols.cells(), ErrorCode::Argument,
          "row/column spaces live on different subdomains");
  const auto& mesh = rows.mesh();
  const auto& rule = triangle_rule(order);
  const int nr = rows.nodes_per_cell(), nc = cols.nodes_per_cell();
  return assemble_cells(
      rows.dim(), cols.dim(), static_cast<int>(rows.cells().size()),
      [&](int cpos, std::vector<Entry>& buf) {
        const int t = rows.cells()[cpos];
        CellGeometry gr, gc;
        for (size_t q = 0; q < rule.points.size(); ++q) {
          const auto& p = rule.points[q];
          gr.gradients(mesh, t, rows.family(), p.l1, p.l2);
          gc.gradients(mesh, t, cols.family(), p.l1, p.l2);
          const double w = rule.weights[q] * gr.detj;  // detj = 2*area
          const double mu = mu_at(t, p.l1, p.l2);
          const double lam = lambda ? lambda->value(mesh, t, p.l1, p.l2) : 0.0;
          for (int i = 0; i < nr; ++i) {
            for (int j = 0; j < nc; ++j) {
              for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                  double v = mu * strain_product(gr.grads[i], gc.grads[j], a, b);
                  if (lambda) v += lam * gc.grads[j][b] * gr.grads[i][a];
                  if (v != 0.0)
                    buf.push_back({rows.cell_dof(cpos, i, a), cols.cell_dof(cpos, j, b),
                                   t, v * w});
                }
              }
            }
          }
        }
      });
}

}  // namespace

std::array<int, kFieldCount + 1> Spaces::offsets() const {
  std::array<int, kFieldCount + 1> off{};
  for (int f = 0; f < kFieldCount; ++f) off[f + 1] = off[f] + (*this)[f]->dim();
  return off;
}

Spaces build_spaces_storage(const Mesh2D& mesh, std::vector<FunctionSpace>& storage) {
  storage.clear();
  storage.reserve(kFieldCount);
  storage.emplace_back(mesh, Subdomain::Stokes, Family::P2, 2);     // u_f
  storage.emplace_back(mesh, Subdomain::Porous, Family::P2, 2);     // u_r
  storage.emplace_back(mesh, Subdomain::Porous, Family::P2, 2);     // y_s
  storage.emplace_back(mesh, Subdomain::Porous, Family::P2, 2);     // u_s
  storage.emplace_back(mesh, Subdomain::Stokes, Family::P1, 1);     // p_S
  storage.emplace_back(mesh, Subdomain::Porous, Family::P1, 1);     // p_P
  storage.emplace_back(mesh, Subdomain::Interface, Family::P1, 1);  // lambda
  Spaces s;
  s.uf = &storage[0];
  s.ur = &storage[1];
  s.ys = &storage[2];
  s.us = &storage[3];
  s.ps = &storage[4];
  s.pp = &storage[5];
  s.lm = &storage[6];
  return s;
}

SparseMat assemble_stokes_viscous(const FunctionSpace& vf, double mu_f, int order) {
  return assemble_vector_strain_form(
      vf, vf, [mu_f](int, double, double) { return mu_f; }, nullptr, order);
}

SparseMat assemble_brinkman_viscous(const FunctionSpace& rows, const FunctionSpace& cols,
                                    double mu_f, const NodalField& phi, int order) {
  const auto& mesh = rows.mesh();
  return assemble_vector_strain_form(
      rows, cols,
      [&, mu_f](int t, double l1, double l2) { return mu_f * phi.value(mesh, t, l1, l2); },
      nullptr, order);
}

SparseMat assemble_elasticity(const FunctionSpace& vs, const NodalField& mu_p,
                              const NodalField& lambda_p, int order) {
  const auto& mesh = vs.mesh();
  return assemble_vector_strain_form(
      vs, vs,
      [&](int t, double l1, double l2) { return mu_p.value(mesh, t, l1, l2); },
      &lambda_p, order);
}

SparseMat assemble_divergence_coupling(const FunctionSpace& v, const FunctionSpace& q,
                                       const NodalField& weight, int order) {
  require(v.components() == 2 && q.components() == 1, ErrorCode::Argument,
          "divergence coupling needs a vector and a scalar space");
  require(v.cells() == q.cells(), ErrorCode::Argument,
          "velocity and pressure spaces live on different subdomains");
  const auto& mesh = v.mesh();
  const auto& rule = triangle_rule(order);
  const int nv = v.nodes_per_cell(), nq = q.nodes_per_cell();
  return assemble_cells(
      q.dim(), v.dim(), static_cast<int>(v.cells().size()),
      [&](int cpos, std::vector<Entry>& buf) {
        const int t = v.cells()[cpos];
        CellGeometry gv;
        double Nq[6], Nv[6];
        const Vec2 gw = weight.gradient(mesh, t);
        for (size_t qp = 0; qp < rule.points.size(); ++qp) {
          const auto& p = rule.points[qp];
          gv.gradients(mesh, t, v.family(), p.l1, p.l2);
          FunctionSpace::shape_tri(q.family(), p.l1, p.l2, Nq);
          FunctionSpace::shape_tri(v.family(), p.l1, p.l2, Nv);
          const double w = rule.weights[qp] * gv.detj;
          const double wval = weight.value(mesh, t, p.l1, p.l2);
          for (int i = 0; i < nq; ++i) {
            for (int j = 0; j < nv; ++j) {
              for (int b = 0; b < 2; ++b) {
                // -(div(w v), q) = -(w dphi_j/dx_b + phi_j dw/dx_b) psi_i
                const double div_part = wval * gv.grads[j][b] + Nv[j] * gw[b];
                buf.push_back({q.cell_dof(cpos, i, 0), v.cell_dof(cpos, j, b), t,
                               -div_part * Nq[i] * w});
              }
            }
          }
        }
      });
}

SparseMat assemble_weighted_mass(const FunctionSpace& rows, const FunctionSpace& cols,
                                 const NodalField& xi, int order) {
  require(rows.components() == cols.components(), ErrorCode::Argument,
          "mass form needs equal component counts");
  require(rows.cells() == cols.cells(), ErrorCode::Argument,
          "row/column spaces live on different subdomains");
  const auto& mesh = rows.mesh();
  const auto& rule = triangle_rule(order);
  const int nr = rows.nodes_per_cell(), nc = cols.nodes_per_cell();
  const int comps = rows.components();
  return assemble_cells(
      rows.dim(), cols.dim(), static_cast<int>(rows.cells().size()),
      [&](int cpos, std::vector<Entry>& buf) {
        const int t = rows.cells()[cpos];
        double Nr[6], Nc[6];
        const auto& tri = mesh.triangles()[t];
        const double detj = cross(mesh.vertices()[tri[1]] - mesh.vertices()[tri[0]],
                                  mesh.vertices()[tri[2]] - mesh.vertices()[tri[0]]);
        for (size_t qp = 0; qp < rule.points.size(); ++qp) {
          const auto& p = rule.points[qp];
          FunctionSpace::shape_tri(rows.family(), p.l1, p.l2, Nr);
          FunctionSpace::shape_tri(cols.family(), p.l1, p.l2, Nc);
          const double w = rule.weights[qp] * detj * xi.value(mesh, t, p.l1, p.l2);
          for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nc; ++j)
              for (int a = 0; a < comps; ++a)
                buf.push_back({rows.cell_dof(cpos, i, a), cols.cell_dof(cpos, j, a), t,
                               Nr[i] * Nc[j] * w});
        }
      });
}

SparseMat assemble_component_laplacian(const FunctionSpace& space, int order) {
  require(space.subdomain() != Subdomain::Interface, ErrorCode::Argument,
          "laplacian helper expects an area subdomain");
  const auto& mesh = space.mesh();
  const auto& rule = triangle_rule(order);
  const int nn = space.nodes_per_cell();
  const int comps = space.components();
  return assemble_cells(
      space.dim(), space.dim(), static_cast<int>(space.cells().size()),
      [&](int cpos, std::vector<Entry>& buf) {
        const int t = space.cells()[cpos];
        CellGeometry g;
        for (size_t q = 0; q < rule.points.size(); ++q) {
          g.gradients(mesh, t, space.family(), rule.points[q].l1, rule.points[q].l2);
          const double w = rule.weights[q] * g.detj;
          for (int i = 0; i < nn; ++i)
            for (int j = 0; j < nn; ++j)
              for (int a = 0; a < comps; ++a)
                buf.push_back({space.cell_dof(cpos, i, a), space.cell_dof(cpos, j, a), t,
                               dot(g.grads[i], g.grads[j]) * w});
        }
      });
}

namespace {

// Trace evaluation of a triangle-based space on an interface edge: shape
// values of the adjacent cell at the physical point of the edge parameter.
struct EdgeTrace {
  int cell_pos = -1;
  double N[6] = {};

  void eval(const FunctionSpace& space, const InterfaceEdge& edge, int tri, Vec2 x) {
    cell_pos = space.cell_pos_of_triangle(tri);
    require(cell_pos >= 0, ErrorCode::Argument, "interface edge not adjacent to subdomain");
    double l1, l2;
    tri_barycentric(space.mesh(), tri, x, &l1, &l2);
    FunctionSpace::shape_tri(space.family(), l1, l2, N);
    (void)edge;
  }
};

}  // namespace

BjsBlocks assemble_bjs(const FunctionSpace& vf, const FunctionSpace& vs, double mu_f,
                       double alpha_bjs, const NodalField& kappa, int order) {
  const auto& mesh = vf.mesh();
  const auto& edges = mesh.interface().edges;
  const auto& rule = edge_rule(order);
  const int nf = vf.nodes_per_cell(), ns = vs.nodes_per_cell();

  std::vector<Eigen::Triplet<double>> tff, tfs, tsf, tss;
  for (const auto& e : edges) {
    const Vec2 p0 = mesh.vertices()[e.v0], p1 = mesh.vertices()[e.v1];
    EdgeTrace trf, trs;
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const double s = rule.points[q];
      const Vec2 x = p0 + s * (p1 - p0);
      double lp1, lp2;
      tri_barycentric(mesh, e.porous_tri, x, &lp1, &lp2);
      const double z = kappa.value(mesh, e.porous_tri, lp1, lp2);  // Z = (kappa tau).tau
      require(z > 0.0, ErrorCode::Numeric,
              "nonpositive tangential permeability on the interface");
      const double coef =
          mu_f * alpha_bjs / std::sqrt(z) * rule.weights[q] * e.length;
      if (coef == 0.0) continue;
      trf.eval(vf, e, e.stokes_tri, x);
      trs.eval(vs, e, e.porous_tri, x);
      const Vec2 tau = e.tangent;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          const double tt = tau[a] * tau[b];
          if (tt == 0.0) continue;
          for (int i = 0; i < nf; ++i)
            for (int j = 0; j < nf; ++j)
              tff.emplace_back(vf.cell_dof(trf.cell_pos, i, a),
                               vf.cell_dof(trf.cell_pos, j, b), coef * tt * trf.N[i] * trf.N[j]);
          for (int i = 0; i < nf; ++i)
            for (int j = 0; j < ns; ++j)
              tfs.emplace_back(vf.cell_dof(trf.cell_pos, i, a),
                               vs.cell_dof(trs.cell_pos, j, b), coef * tt * trf.N[i] * trs.N[j]);
          for (int i = 0; i < ns; ++i)
            for (int j = 0; j < nf; ++j)
              tsf.emplace_back(vs.cell_dof(trs.cell_pos, i, a),
                               vf.cell_dof(trf.cell_pos, j, b), coef * tt * trs.N[i] * trf.N[j]);
          for (int i = 0; i < ns; ++i)
            for (int j = 0; j < ns; ++j)
              tss.emplace_back(vs.cell_dof(trs.cell_pos, i, a),
                               vs.cell_dof(trs.cell_pos, j, b), coef * tt * trs.N[i] * trs.N[j]);
        }
      }
    }
  }
  BjsBlocks out;
  out.ff.resize(vf.dim(), vf.dim());
  out.fs.resize(vf.dim(), vs.dim());
  out.sf.resize(vs.dim(), vf.dim());
  out.ss.resize(vs.dim(), vs.dim());
  out.ff.setFromTriplets(tff.begin(), tff.end());
  out.fs.setFromTriplets(tfs.begin(), tfs.end());
  out.sf.setFromTriplets(tsf.begin(), tsf.end());
  out.ss.setFromTriplets(tss.begin(), tss.end());
  return out;
}

InterfaceCoupling assemble_interface_coupling(const FunctionSpace& vf,
                                              const FunctionSpace& vr,
                                              const FunctionSpace& vs,
                                              const FunctionSpace& lambda, int order) {
  require(lambda.subdomain() == Subdomain::Interface, ErrorCode::Argument,
          "multiplier space must live on the interface");
  const auto& mesh = vf.mesh();
  const auto& edges = mesh.interface().edges;
  const auto& rule = edge_rule(order);
  const int nl = lambda.nodes_per_cell();

  std::vector<Eigen::Triplet<double>> tf, tp, ts;
  double Nl[3];
  for (size_t ei = 0; ei < edges.size(); ++ei) {
    const auto& e = edges[ei];
    const Vec2 p0 = mesh.vertices()[e.v0], p1 = mesh.vertices()[e.v1];
    const Vec2 n_p = e.normal_p;
    const Vec2 n_s = n_p * (-1.0);
    EdgeTrace trf, trr, trs;
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const double s = rule.points[q];
      const Vec2 x = p0 + s * (p1 - p0);
      const double w = rule.weights[q] * e.length;
      FunctionSpace::shape_edge(lambda.family(), s, Nl);
      trf.eval(vf, e, e.stokes_tri, x);
      trr.eval(vr, e, e.porous_tri, x);
      trs.eval(vs, e, e.porous_tri, x);
      for (int i = 0; i < nl; ++i) {
        const int li = lambda.cell_dof(static_cast<int>(ei), i, 0);
        for (int b = 0; b < 2; ++b) {
          for (int j = 0; j < vf.nodes_per_cell(); ++j)
            tf.emplace_back(li, vf.cell_dof(trf.cell_pos, j, b),
                            w * Nl[i] * trf.N[j] * n_s[b]);
          for (int j = 0; j < vr.nodes_per_cell(); ++j)
            tp.emplace_back(li, vr.cell_dof(trr.cell_pos, j, b),
                            w * Nl[i] * trr.N[j] * n_p[b]);
          for (int j = 0; j < vs.nodes_per_cell(); ++j)
            ts.emplace_back(li, vs.cell_dof(trs.cell_pos, j, b),
                            w * Nl[i] * trs.N[j] * n_p[b]);
        }
      }
    }
  }
  InterfaceCoupling out;
  out.f.resize(lambda.dim(), vf.dim());
  out.p.resize(lambda.dim(), vr.dim());
  out.s.resize(lambda.dim(), vs.dim());
  out.f.setFromTriplets(tf.begin(), tf.end());
  out.p.setFromTriplets(tp.begin(), tp.end());
  out.s.setFromTriplets(ts.begin(), ts.end());
  return out;
}

namespace {

void add_volume_vector_load(Eigen::VectorXd& load, int offset, const FunctionSpace& v,
                            const VectorFn& f, double t, int order) {
  const auto& mesh = v.mesh();
  const auto& rule = triangle_rule(order);
  const int nn = v.nodes_per_cell();
  double N[6];
  for (size_t c = 0; c < v.cells().size(); ++c) {
    const int tri = v.cells()[c];
    const auto& tv = mesh.triangles()[tri];
    const double detj = cross(mesh.vertices()[tv[1]] - mesh.vertices()[tv[0]],
                              mesh.vertices()[tv[2]] - mesh.vertices()[tv[0]]);
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const auto& p = rule.points[q];
      const Vec2 x = physical_point(mesh, tri, p.l1, p.l2);
      const Vec2 fv = f(x, t);
      FunctionSpace::shape_tri(v.family(), p.l1, p.l2, N);
      const double w = rule.weights[q] * detj;
      for (int i = 0; i < nn; ++i) {
        load[offset + v.cell_dof(static_cast<int>(c), i, 0)] += w * N[i] * fv.x;
        load[offset + v.cell_dof(static_cast<int>(c), i, 1)] += w * N[i] * fv.y;
      }
    }
  }
}

void add_volume_scalar_load(Eigen::VectorXd& load, int offset, const FunctionSpace& q,
                            const ScalarFn& f, double t, int order) {
  const auto& mesh = q.mesh();
  const auto& rule = triangle_rule(order);
  const int nn = q.nodes_per_cell();
  double N[6];
  for (size_t c = 0; c < q.cells().size(); ++c) {
    const int tri = q.cells()[c];
    const auto& tv = mesh.triangles()[tri];
    const double detj = cross(mesh.vertices()[tv[1]] - mesh.vertices()[tv[0]],
                              mesh.vertices()[tv[2]] - mesh.vertices()[tv[0]]);
    for (size_t qp = 0; qp < rule.points.size(); ++qp) {
      const auto& p = rule.points[qp];
      const Vec2 x = physical_point(mesh, tri, p.l1, p.l2);
      const double fv = f(x, t);
      FunctionSpace::shape_tri(q.family(), p.l1, p.l2, N);
      const double w = rule.weights[qp] * detj;
      for (int i = 0; i < nn; ++i)
        load[offset + q.cell_dof(static_cast<int>(c), i, 0)] += w * N[i] * fv;
    }
  }
}

// Weighted porous momentum rows (rho_f phi f_P, v) and (rho_p f_P, w).
void add_weighted_vector_load(Eigen::VectorXd& load, int offset, const FunctionSpace& v,
                              const NodalField& weight, const VectorFn& f, double t,
                              int order) {
  const auto& mesh = v.mesh();
  const auto& rule = triangle_rule(order);
  const int nn = v.nodes_per_cell();
  double N[6];
  for (size_t c = 0; c < v.cells().size(); ++c) {
    const int tri = v.cells()[c];
    const auto& tv = mesh.triangles()[tri];
    const double detj = cross(mesh.vertices()[tv[1]] - mesh.vertices()[tv[0]],
                              mesh.vertices()[tv[2]] - mesh.vertices()[tv[0]]);
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const auto& p = rule.points[q];
      const Vec2 x = physical_point(mesh, tri, p.l1, p.l2);
      const Vec2 fv = f(x, t) * weight.value(mesh, tri, p.l1, p.l2);
      FunctionSpace::shape_tri(v.family(), p.l1, p.l2, N);
      const double w = rule.weights[q] * detj;
      for (int i = 0; i < nn; ++i) {
        load[offset + v.cell_dof(static_cast<int>(c), i, 0)] += w * N[i] * fv.x;
        load[offset + v.cell_dof(static_cast<int>(c), i, 1)] += w * N[i] * fv.y;
      }
    }
  }
}

}  // namespace

Eigen::VectorXd assemble_load(const Spaces& spaces, const MaterialFields& materials,
                              const SourceSet& sources,
                              const InterfaceCorrections* corrections, double t) {
  const auto off = spaces.offsets();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(spaces.total_dim());
  const Mesh2D& mesh = spaces.uf->mesh();

  if (sources.f_S)
    add_volume_vector_load(load, off[kUf], *spaces.uf, sources.f_S, t,
                           kVolumeOrderVariable);
  if (sources.override_mom_r)
    add_volume_vector_load(load, off[kUr], *spaces.ur, sources.override_mom_r, t,
                           kVolumeOrderVariable);
  else if (sources.f_P)
    add_weighted_vector_load(load, off[kUr], *spaces.ur,
                             materials.weight_rho_f_phi(mesh), sources.f_P, t,
                             kVolumeOrderVariable);
  if (sources.override_mom_s)
    add_volume_vector_load(load, off[kYs], *spaces.ys, sources.override_mom_s, t,
                           kVolumeOrderVariable);
  else if (sources.f_P)
    add_weighted_vector_load(load, off[kYs], *spaces.ys, materials.rho_p, sources.f_P,
                             t, kVolumeOrderVariable);
  if (sources.r_S)
    add_volume_scalar_load(load, off[kPs], *spaces.ps, sources.r_S, t,
                           kVolumeOrderVariable);
  if (sources.override_mass_p) {
    add_volume_scalar_load(load, off[kPp], *spaces.pp, sources.override_mass_p, t,
                           kVolumeOrderVariable);
  } else if (sources.theta_source) {
    const double inv_rho_f = 1.0 / materials.rho_f;
    add_volume_scalar_load(
        load, off[kPp], *spaces.pp,
        [&](Vec2 x, double tt) { return inv_rho_f * sources.theta_source(x, tt); }, t,
        kVolumeOrderVariable);
  } else if (materials.theta != 0.0) {
    const double val = materials.theta / materials.rho_f;
    add_volume_scalar_load(
        load, off[kPp], *spaces.pp, [val](Vec2, double) { return val; }, t,
        kVolumeOrderVariable);
  }

  if (corrections) {
    const auto& edges = mesh.interface().edges;
    const auto& rule = edge_rule(kEdgeOrderDefault);
    double Nl[3];
    for (size_t ei = 0; ei < edges.size(); ++ei) {
      const auto& e = edges[ei];
      const Vec2 p0 = mesh.vertices()[e.v0], p1 = mesh.vertices()[e.v1];
      EdgeTrace trf, trr, trs;
      for (size_t q = 0; q < rule.points.size(); ++q) {
        const double s = rule.points[q];
        const Vec2 x = p0 + s * (p1 - p0);
        const double w = rule.weights[q] * e.length;
        const double m1 = corrections->m1(x, t);
        const double m2 = corrections->m2(x, t);
        const Vec2 m3 = corrections->m3(x, t);
        const double m4 = corrections->m4(x, t);
        const double m5 = corrections->m5(x, t);
        trf.eval(*spaces.uf, e, e.stokes_tri, x);
        trr.eval(*spaces.ur, e, e.porous_tri, x);
        trs.eval(*spaces.ys, e, e.porous_tri, x);
        const Vec2 tau = e.tangent, n_p = e.normal_p;
        // F(v_f) -= <m4, v_f.tau>; F(v_r) += <m2, v_r.n_P> + <m5, v_r.tau>;
        // F(w_s) += <m3, w_s> + <m4, w_s.tau>; F(mu) -= <m1, mu>.
        for (int j = 0; j < spaces.uf->nodes_per_cell(); ++j)
          for (int b = 0; b < 2; ++b)
            load[off[kUf] + spaces.uf->cell_dof(trf.cell_pos, j, b)] -=
                w * m4 * trf.N[j] * tau[b];
        for (int j = 0; j < spaces.ur->nodes_per_cell(); ++j)
          for (int b = 0; b < 2; ++b)
            load[off[kUr] + spaces.ur->cell_dof(trr.cell_pos, j, b)] +=
                w * trr.N[j] * (m2 * n_p[b] + m5 * tau[b]);
        for (int j = 0; j < spaces.ys->nodes_per_cell(); ++j)
          for (int b = 0; b < 2; ++b)
            load[off[kYs] + spaces.ys->cell_dof(trs.cell_pos, j, b)] +=
                w * trs.N[j] * (m3[b] + m4 * tau[b]);
        FunctionSpace::shape_edge(spaces.lm->family(), s, Nl);
        for (int i = 0; i < spaces.lm->nodes_per_cell(); ++i)
          load[off[kLm] + spaces.lm->cell_dof(static_cast<int>(ei), i, 0)] -=
              w * m1 * Nl[i];
      }
    }
  }
  return load;
}

void add_traction_load(Eigen::VectorXd& load, const Spaces& spaces, Field field,
                       const std::vector<int>& markers,
                       const std::function<Vec2(Vec2, Vec2, double)>& traction,
                       double t) {
  const FunctionSpace& v = *spaces[field];
  require(v.components() == 2, ErrorCode::Argument, "traction load needs a vector field");
  const int offset = spaces.offsets()[field];
  const auto& mesh = v.mesh();
  const auto& rule = edge_rule(kEdgeOrderDefault);
  const CellTag tag =
      v.subdomain() == Subdomain::Stokes ? CellTag::Stokes : CellTag::Porous;
  for (const auto& be : mesh.boundary_edges()) {
    if (std::find(markers.begin(), markers.end(), be.marker) == markers.end()) continue;
    const int eid = mesh.edge_index(be.v0, be.v1);
    int tri = -1;
    for (int tt : mesh.edge_triangles()[eid])
      if (tt >= 0 && mesh.cell_tags()[tt] == tag) tri = tt;
    if (tri < 0) continue;
    const int cpos = v.cell_pos_of_triangle(tri);
    const Vec2 p0 = mesh.vertices()[be.v0], p1 = mesh.vertices()[be.v1];
    const double len = norm(p1 - p0);
    Vec2 n = rot90(p1 - p0) / len;
    if (dot((p0 + p1) * 0.5 - mesh.triangle_centroid(tri), n) < 0.0) n = n * (-1.0);
    double N[6];
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const double s = rule.points[q];
      const Vec2 x = p0 + s * (p1 - p0);
      const Vec2 g = traction(x, n, t);
      double l1, l2;
      tri_barycentric(mesh, tri, x, &l1, &l2);
      FunctionSpace::shape_tri(v.family(), l1, l2, N);
      const double w = rule.weights[q] * len;
      for (int i = 0; i < v.nodes_per_cell(); ++i) {
        load[offset + v.cell_dof(cpos, i, 0)] += w * N[i] * g.x;
        load[offset + v.cell_dof(cpos, i, 1)] += w * N[i] * g.y;
      }
    }
  }
}

SparseMat BlockMatrix::flatten() const {
  std::vector<Eigen::Triplet<double>> trip;
  size_t nnz = 0;
  for (int r = 0; r < kFieldCount; ++r)
    for (int c = 0; c < kFieldCount; ++c) nnz += block[r][c].nonZeros();
  trip.reserve(nnz);
  for (int r = 0; r < kFieldCount; ++r) {
    for (int c = 0; c < kFieldCount; ++c) {
      const auto& b = block[r][c];
      for (int k = 0; k < b.outerSize(); ++k)
        for (SparseMat::InnerIterator it(b, k); it; ++it)
          trip.emplace_back(offsets[r] + static_cast<int>(it.row()),
                            offsets[c] + static_cast<int>(it.col()), it.value());
    }
  }
  SparseMat m(offsets[kFieldCount], offsets[kFieldCount]);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

CoupledSystem assemble_system(const Mesh2D& mesh, const Spaces& spaces,
                              const MaterialFields& materials, double t,
                              const SourceSet& sources,
                              const InterfaceCorrections* corrections) {
  for (int f = 0; f < kFieldCount; ++f)
    require(&spaces[f]->mesh() == &mesh, ErrorCode::Argument,
            "space/mesh mismatch in system assembly");

  CoupledSystem sys;
  sys.spaces = spaces;
  const auto off = spaces.offsets();
  sys.E.offsets = off;
  sys.H.offsets = off;
  sys.dim = off[kFieldCount];

  const auto& uf = *spaces.uf;
  const auto& ur = *spaces.ur;
  const auto& ys = *spaces.ys;
  const auto& us = *spaces.us;
  const auto& ps = *spaces.ps;
  const auto& pp = *spaces.pp;
  const auto& lm = *spaces.lm;

  const NodalField w_rf_phi = materials.weight_rho_f_phi(mesh);
  const NodalField w_storage = materials.weight_storage(mesh);
  const NodalField w_drag = materials.weight_drag(mesh);
  const NodalField one = NodalField::constant(mesh, 1.0);

  // Viscous, elastic and mass blocks.
  const SparseMat a_fS = assemble_stokes_viscous(uf, materials.mu_f);
  const int phi_order = materials.phi.uniform() ? kVolumeOrderConstant : kVolumeOrderVariable;
  const SparseMat a_fP_rr = assemble_brinkman_viscous(ur, ur, materials.mu_f, materials.phi, phi_order);
  const SparseMat a_fP_rs = assemble_brinkman_viscous(ur, ys, materials.mu_f, materials.phi, phi_order);
  const SparseMat a_fP_sr = assemble_brinkman_viscous(ys, ur, materials.mu_f, materials.phi, phi_order);
  const SparseMat a_fP_ss = assemble_brinkman_viscous(ys, ys, materials.mu_f, materials.phi, phi_order);
  const SparseMat a_sP = assemble_elasticity(ys, materials.mu_p, materials.lambda_p);

  const SparseMat m_rfphi_rr = assemble_weighted_mass(ur, ur, w_rf_phi);
  const SparseMat m_rfphi_rus = assemble_weighted_mass(ur, us, w_rf_phi);
  const SparseMat m_rfphi_sr = assemble_weighted_mass(ys, ur, w_rf_phi);
  const SparseMat m_rhop_sus = assemble_weighted_mass(ys, us, materials.rho_p);
  const SparseMat m_rhop_uss = assemble_weighted_mass(us, ys, materials.rho_p);
  const SparseMat m_rhop_usus = assemble_weighted_mass(us, us, materials.rho_p);
  const SparseMat m_storage = assemble_weighted_mass(pp, pp, w_storage);
  const SparseMat m_drag = assemble_weighted_mass(ur, ur, w_drag);

  // Divergence couplings (rows are pressures).
  const SparseMat b_S = assemble_divergence_coupling(uf, ps, one, kVolumeOrderConstant);
  const SparseMat b_sP = assemble_divergence_coupling(ys, pp, one, kVolumeOrderConstant);
  const SparseMat b_fP = assemble_divergence_coupling(ur, pp, materials.phi);

  const BjsBlocks bjs =
      assemble_bjs(uf, ys, materials.mu_f, materials.alpha_bjs, materials.kappa);
  const InterfaceCoupling gam = assemble_interface_coupling(uf, ur, ys, lm);

  auto& E = sys.E.block;
  auto& H = sys.H.block;

  // Time-derivative matrix E.
  E[kUf][kYs] = -bjs.fs;
  E[kUr][kUr] = m_rfphi_rr;
  E[kUr][kYs] = a_fP_rs;
  E[kUr][kUs] = m_rfphi_rus;
  E[kYs][kUr] = m_rfphi_sr;
  E[kYs][kYs] = bjs.ss + a_fP_ss;
  E[kYs][kUs] = m_rhop_sus;
  E[kUs][kYs] = -m_rhop_uss;
  E[kPp][kPp] = m_storage;
  E[kPp][kYs] = -b_sP;
  E[kLm][kYs] = -gam.s;

  // Stiffness matrix H.
  H[kUf][kUf] = a_fS + bjs.ff;
  H[kUf][kPs] = SparseMat(b_S.transpose());
  H[kUf][kLm] = SparseMat(gam.f.transpose());
  H[kUr][kUr] = a_fP_rr + m_drag;
  H[kUr][kPp] = SparseMat(b_fP.transpose());
  H[kUr][kLm] = SparseMat(gam.p.transpose());
  H[kYs][kUf] = -bjs.sf;
  H[kYs][kUr] = a_fP_sr;
  H[kYs][kYs] = a_sP;
  H[kYs][kPp] = SparseMat(b_sP.transpose());
  H[kYs][kLm] = SparseMat(gam.s.transpose());
  H[kUs][kUs] = m_rhop_usus;
  H[kPs][kUf] = -b_S;
  H[kPp][kUr] = -b_fP;
  H[kLm][kUf] = -gam.f;
  H[kLm][kUr] = -gam.p;

  if (materials.theta != 0.0) {
    const NodalField w_theta = materials.weight_theta(mesh);
    const SparseMat m_th_rr = assemble_weighted_mass(ur, ur, w_theta, kVolumeOrderConstant);
    const SparseMat m_th_rs = assemble_weighted_mass(ur, ys, w_theta, kVolumeOrderConstant);
    const SparseMat m_th_sr = assemble_weighted_mass(ys, ur, w_theta, kVolumeOrderConstant);
    const SparseMat m_th_ss = assemble_weighted_mass(ys, ys, w_theta, kVolumeOrderConstant);
    E[kUr][kYs] = E[kUr][kYs] - m_th_rs;
    E[kYs][kYs] = E[kYs][kYs] - m_th_ss;
    H[kUr][kUr] = H[kUr][kUr] - m_th_rr;
    H[kYs][kUr] = H[kYs][kUr] - m_th_sr;
  }

  sys.load = assemble_load(spaces, materials, sources, corrections, t);
  return sys;
}

ConstrainedOperator constrain_operator(const SparseMat& mat,
                                       const std::vector<int>& constrained_dofs) {
  ConstrainedOperator op;
  op.full = mat;
  op.dofs = constrained_dofs;
  std::sort(op.dofs.begin(), op.dofs.end());
  op.dofs.erase(std::unique(op.dofs.begin(), op.dofs.end()), op.dofs.end());
  op.is_constrained.assign(mat.rows(), 0);
  for (int d : op.dofs) {
    require(d >= 0 && d < mat.rows(), ErrorCode::Argument, "constrained dof out of range");
    op.is_constrained[d] = 1;
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mat.nonZeros() + op.dofs.size());
  for (int k = 0; k < mat.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(mat, k); it; ++it) {
      if (op.is_constrained[it.row()] || op.is_constrained[it.col()]) continue;
      trip.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (int d : op.dofs) trip.emplace_back(d, d, 1.0);
  op.matrix.resize(mat.rows(), mat.cols());
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  return op;
}

void apply_constraints_rhs(const ConstrainedOperator& op,
                           const std::vector<std::pair<int, double>>& values,
                           Eigen::VectorXd& rhs) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(rhs.size());
  for (const auto& [dof, val] : values) g[dof] = val;
  Eigen::VectorXd lift = op.full * g;
  for (int i = 0; i < rhs.size(); ++i)
    if (!op.is_constrained[i]) rhs[i] -= lift[i];
  for (const auto& [dof, val] : values) rhs[dof] = val;
}

std::vector<int> global_bc_dofs(const Spaces& spaces, const std::vector<GlobalBC>& bcs) {
  const auto off = spaces.offsets();
  std::vector<int> dofs;
  for (const auto& b : bcs)
    for (int d : b.bc.dofs) dofs.push_back(off[b.field] + d);
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
  return dofs;
}

std::vector<std::pair<int, double>> global_bc_values(const Spaces& spaces,
                                                     const std::vector<GlobalBC>& bcs,
                                                     double t) {
  const auto off = spaces.offsets();
  std::vector<std::pair<int, double>> vals;
  for (const auto& b : bcs) {
    for (const auto& [dof, val] : b.bc.evaluate(t)) vals.emplace_back(off[b.field] + dof, val);
  }
  std::sort(vals.begin(), vals.end());
  for (size_t i = 1; i < vals.size(); ++i) {
    if (vals[i].first == vals[i - 1].first) {
      require(std::abs(vals[i].second - vals[i - 1].second) <=
                  1e-12 * std::max(1.0, std::abs(vals[i].second)),
              ErrorCode::BcConflict,
              "conflicting boundary values on dof " + std::to_string(vals[i].first));
    }
  }
  vals.erase(std::unique(vals.begin(), vals.end(),
                         [](const auto& a, const auto& b) { return a.first == b.first; }),
             vals.end());
  return vals;
}

}  // namespace fpsi
