#include "fpsi/fespace.hpp"

#include <algorithm>
#include <cmath>

#include "fpsi/errors.hpp"

namespace fpsi {

FunctionSpace::FunctionSpace(const Mesh2D& mesh, Subdomain sub, Family family,
                             int components)
    : mesh_(&mesh), sub_(sub), family_(family), components_(components) {
  require(components == 1 || components == 2, ErrorCode::Argument,
          "components must be 1 or 2");
  vertex_node_.assign(mesh.vertex_count(), -1);

  if (sub == Subdomain::Interface) {
    require(components == 1, ErrorCode::Argument,
            "the interface multiplier space is scalar");
    nodes_per_cell_ = edge_node_count(family);
    const auto& edges = mesh.interface().edges;
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) cells_.push_back(e);
    // Vertex nodes along the trace.
    for (const auto& e : edges) {
      for (int v : {e.v0, e.v1}) {
        if (vertex_node_[v] < 0) {
          vertex_node_[v] = static_cast<int>(node_coords_.size());
          node_coords_.push_back(mesh.vertices()[v]);
        }
      }
    }
    std::vector<int> mid_node;
    if (family == Family::P2) {
      mid_node.resize(edges.size());
      for (size_t e = 0; e < edges.size(); ++e) {
        mid_node[e] = static_cast<int>(node_coords_.size());
        node_coords_.push_back(
            (mesh.vertices()[edges[e].v0] + mesh.vertices()[edges[e].v1]) * 0.5);
      }
    }
    cell_nodes_.resize(cells_.size() * nodes_per_cell_);
    for (size_t e = 0; e < edges.size(); ++e) {
      cell_nodes_[e * nodes_per_cell_ + 0] = vertex_node_[edges[e].v0];
      cell_nodes_[e * nodes_per_cell_ + 1] = vertex_node_[edges[e].v1];
      if (family == Family::P2) cell_nodes_[e * nodes_per_cell_ + 2] = mid_node[e];
    }
    return;
  }

  const CellTag tag = sub == Subdomain::Stokes ? CellTag::Stokes : CellTag::Porous;
  nodes_per_cell_ = tri_node_count(family);
  tri_cell_pos_.assign(mesh.triangle_count(), -1);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    if (mesh.cell_tags()[t] == tag) {
      tri_cell_pos_[t] = static_cast<int>(cells_.size());
      cells_.push_back(t);
    }
  }

  // Vertex nodes, ordered by mesh vertex id.
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (mesh.vertex_in_subdomain(v, tag)) {
      vertex_node_[v] = static_cast<int>(node_coords_.size());
      node_coords_.push_back(mesh.vertices()[v]);
    }
  }
  // Edge midside nodes for P2, ordered by mesh edge id.
  if (family == Family::P2) {
    edge_node_.assign(mesh.edge_vertices().size(), -1);
    std::vector<char> edge_in(mesh.edge_vertices().size(), 0);
    for (int t : cells_)
      for (int e : mesh.triangle_edges()[t]) edge_in[e] = 1;
    for (size_t e = 0; e < edge_in.size(); ++e) {
      if (!edge_in[e]) continue;
      edge_node_[e] = static_cast<int>(node_coords_.size());
      const auto ev = mesh.edge_vertices()[e];
      node_coords_.push_back((mesh.vertices()[ev[0]] + mesh.vertices()[ev[1]]) * 0.5);
    }
  }

  cell_nodes_.resize(cells_.size() * nodes_per_cell_);
  for (size_t c = 0; c < cells_.size(); ++c) {
    const int t = cells_[c];
    const auto& tri = mesh.triangles()[t];
    for (int i = 0; i < 3; ++i)
      cell_nodes_[c * nodes_per_cell_ + i] = vertex_node_[tri[i]];
    if (family == Family::P2) {
      const auto& te = mesh.triangle_edges()[t];
      for (int i = 0; i < 3; ++i)
        cell_nodes_[c * nodes_per_cell_ + 3 + i] = edge_node_[te[i]];
    }
  }
}

std::vector<int> FunctionSpace::nodes_on_edge(const BoundaryEdge& be) const {
  std::vector<int> nodes;
  const int n0 = vertex_node_[be.v0];
  const int n1 = vertex_node_[be.v1];
  if (n0 < 0 || n1 < 0) return nodes;
  // The edge must actually border this subdomain, not merely touch it at
  // both endpoints (possible at subdomain corners).
  const int eid = mesh_->edge_index(be.v0, be.v1);
  if (sub_ != Subdomain::Interface) {
    const CellTag tag = sub_ == Subdomain::Stokes ? CellTag::Stokes : CellTag::Porous;
    bool borders = false;
    for (int t : mesh_->edge_triangles()[eid])
      if (t >= 0 && mesh_->cell_tags()[t] == tag) borders = true;
    if (!borders) return nodes;
  }
  nodes.push_back(n0);
  nodes.push_back(n1);
  if (family_ == Family::P2 && !edge_node_.empty() && edge_node_[eid] >= 0)
    nodes.push_back(edge_node_[eid]);
  return nodes;
}

Eigen::VectorXd FunctionSpace::interpolate(const ScalarFn& f, double t) const {
  require(components_ == 1, ErrorCode::Argument, "scalar interpolation on vector space");
  Eigen::VectorXd c(dim());
  for (int n = 0; n < node_count(); ++n) {
    const double v = f(node_coords_[n], t);
    require(std::isfinite(v), ErrorCode::Numeric, "non-finite value in interpolation");
    c[n] = v;
  }
  return c;
}

Eigen::VectorXd FunctionSpace::interpolate(const VectorFn& f, double t) const {
  require(components_ == 2, ErrorCode::Argument, "vector interpolation on scalar space");
  Eigen::VectorXd c(dim());
  for (int n = 0; n < node_count(); ++n) {
    const Vec2 v = f(node_coords_[n], t);
    require(std::isfinite(v.x) && std::isfinite(v.y), ErrorCode::Numeric,
            "non-finite value in interpolation");
    c[2 * n] = v.x;
    c[2 * n + 1] = v.y;
  }
  return c;
}

namespace {

bool barycentric_in_cell(const Mesh2D& mesh, int t, Vec2 x, double* l1, double* l2) {
  const auto& tri = mesh.triangles()[t];
  const Vec2 a = mesh.vertices()[tri[0]];
  const Vec2 b = mesh.vertices()[tri[1]];
  const Vec2 c = mesh.vertices()[tri[2]];
  const double det = cross(b - a, c - a);
  const double u = cross(x - a, c - a) / det;
  const double v = cross(b - a, x - a) / det;
  if (u < -1e-10 || v < -1e-10 || u + v > 1.0 + 1e-10) return false;
  *l1 = u;
  *l2 = v;
  return true;
}

}  // namespace

double FunctionSpace::evaluate_scalar(const Eigen::VectorXd& coeffs, Vec2 x) const {
  require(sub_ != Subdomain::Interface, ErrorCode::Argument,
          "point evaluation on the trace space is not supported");
  double N[6];
  for (size_t c = 0; c < cells_.size(); ++c) {
    double l1, l2;
    if (!barycentric_in_cell(*mesh_, cells_[c], x, &l1, &l2)) continue;
    shape_tri(family_, l1, l2, N);
    double val = 0.0;
    for (int i = 0; i < nodes_per_cell_; ++i)
      val += N[i] * coeffs[cell_dof(static_cast<int>(c), i, 0)];
    return val;
  }
  fail(ErrorCode::Argument, "point outside the subdomain");
}

Vec2 FunctionSpace::evaluate_vector(const Eigen::VectorXd& coeffs, Vec2 x) const {
  double N[6];
  for (size_t c = 0; c < cells_.size(); ++c) {
    double l1, l2;
    if (!barycentric_in_cell(*mesh_, cells_[c], x, &l1, &l2)) continue;
    shape_tri(family_, l1, l2, N);
    Vec2 val;
    for (int i = 0; i < nodes_per_cell_; ++i) {
      val.x += N[i] * coeffs[cell_dof(static_cast<int>(c), i, 0)];
      val.y += N[i] * coeffs[cell_dof(static_cast<int>(c), i, 1)];
    }
    return val;
  }
  fail(ErrorCode::Argument, "point outside the subdomain");
}

void FunctionSpace::shape_tri(Family f, double l1, double l2, double* N) {
  const double l0 = 1.0 - l1 - l2;
  if (f == Family::P1) {
    N[0] = l0;
    N[1] = l1;
    N[2] = l2;
    return;
  }
  N[0] = l0 * (2.0 * l0 - 1.0);
  N[1] = l1 * (2.0 * l1 - 1.0);
  N[2] = l2 * (2.0 * l2 - 1.0);
  N[3] = 4.0 * l1 * l2;  // midside opposite vertex 0
  N[4] = 4.0 * l2 * l0;  // midside opposite vertex 1
  N[5] = 4.0 * l0 * l1;  // midside opposite vertex 2
}

void FunctionSpace::shape_tri_grad(Family f, double l1, double l2, Vec2* G) {
  const Vec2 g0{-1.0, -1.0}, g1{1.0, 0.0}, g2{0.0, 1.0};
  const double l0 = 1.0 - l1 - l2;
  if (f == Family::P1) {
    G[0] = g0;
    G[1] = g1;
    G[2] = g2;
    return;
  }
  G[0] = g0 * (4.0 * l0 - 1.0);
  G[1] = g1 * (4.0 * l1 - 1.0);
  G[2] = g2 * (4.0 * l2 - 1.0);
  G[3] = 4.0 * (g1 * l2 + g2 * l1);
  G[4] = 4.0 * (g2 * l0 + g0 * l2);
  G[5] = 4.0 * (g0 * l1 + g1 * l0);
}

void FunctionSpace::shape_edge(Family f, double s, double* N) {
  if (f == Family::P1) {
    N[0] = 1.0 - s;
    N[1] = s;
    return;
  }
  N[0] = (1.0 - s) * (1.0 - 2.0 * s);
  N[1] = s * (2.0 * s - 1.0);
  N[2] = 4.0 * s * (1.0 - s);
}

std::vector<std::pair<int, double>> BCSet::evaluate(double t) const {
  std::vector<std::pair<int, double>> out;
  out.reserve(dofs.size());
  for (size_t i = 0; i < dofs.size(); ++i)
    out.emplace_back(dofs[i], value(coords[i], comps[i], t));
  return out;
}

namespace {

BCSet collect_bcs(const FunctionSpace& space, const std::vector<int>& markers,
                  int component) {
  BCSet bc;
  bc.space = &space;
  for (int m : markers) {
    bool found = false;
    for (const auto& be : space.mesh().boundary_edges())
      if (be.marker == m) found = true;
    require(found, ErrorCode::Argument, "marker " + marker::name(m) + " not in mesh");
  }
  std::vector<char> seen(space.dim(), 0);
  for (const auto& be : space.mesh().boundary_edges()) {
    if (std::find(markers.begin(), markers.end(), be.marker) == markers.end()) continue;
    for (int n : space.nodes_on_edge(be)) {
      for (int c = 0; c < space.components(); ++c) {
        if (component >= 0 && c != component) continue;
        const int dof = n * space.components() + c;
        if (seen[dof]) continue;
        seen[dof] = 1;
        bc.dofs.push_back(dof);
        bc.coords.push_back(space.node_coords()[n]);
        bc.comps.push_back(c);
      }
    }
  }
  return bc;
}

}  // namespace

BCSet dirichlet_bcs(const FunctionSpace& space, const std::vector<int>& markers,
                    ScalarFn g, int component) {
  BCSet bc = collect_bcs(space, markers, component);
  bc.value = [g = std::move(g)](Vec2 x, int, double t) { return g(x, t); };
  return bc;
}

BCSet dirichlet_bcs(const FunctionSpace& space, const std::vector<int>& markers,
                    VectorFn g) {
  require(space.components() == 2, ErrorCode::Argument,
          "vector boundary data on a scalar space");
  BCSet bc = collect_bcs(space, markers, -1);
  bc.value = [g = std::move(g)](Vec2 x, int c, double t) {
    const Vec2 v = g(x, t);
    return c == 0 ? v.x : v.y;
  };
  return bc;
}

}  // namespace fpsi
