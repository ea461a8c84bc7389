#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "fpsi/mesh.hpp"

namespace fpsi {

enum class Family { P1, P2 };
enum class Subdomain { Stokes, Porous, Interface };

using ScalarFn = std::function<double(Vec2, double)>;
using VectorFn = std::function<Vec2(Vec2, double)>;

// Continuous Lagrange space on a tagged subdomain, or the scalar multiplier
// space on the interface trace mesh. Dof layout is node-major: the dofs of
// node n are n*components .. n*components+components-1.
class FunctionSpace {
public:
  FunctionSpace(const Mesh2D& mesh, Subdomain sub, Family family, int components);

  const Mesh2D& mesh() const { return *mesh_; }
  Subdomain subdomain() const { return sub_; }
  Family family() const { return family_; }
  int components() const { return components_; }
  int node_count() const { return static_cast<int>(node_coords_.size()); }
  int dim() const { return node_count() * components_; }

  // Cells: triangle indices for area subdomains, interface-edge indices for
  // the multiplier space.
  const std::vector<int>& cells() const { return cells_; }
  int nodes_per_cell() const { return nodes_per_cell_; }
  int cell_node(int cell_pos, int local_node) const {
    return cell_nodes_[cell_pos * nodes_per_cell_ + local_node];
  }
  int cell_dof(int cell_pos, int local_node, int comp) const {
    return cell_node(cell_pos, local_node) * components_ + comp;
  }
  // Cell position of a mesh triangle, -1 outside the subdomain.
  int cell_pos_of_triangle(int t) const { return tri_cell_pos_[t]; }

  const std::vector<Vec2>& node_coords() const { return node_coords_; }
  Vec2 dof_coord(int dof) const { return node_coords_[dof / components_]; }
  int dof_component(int dof) const { return dof % components_; }

  int vertex_node(int mesh_vertex) const { return vertex_node_[mesh_vertex]; }
  int edge_node(int mesh_edge) const {
    return edge_node_.empty() ? -1 : edge_node_[mesh_edge];
  }

  // Space nodes lying on a marked boundary edge (vertices, plus the midside
  // node for P2); empty when the edge does not border this subdomain.
  std::vector<int> nodes_on_edge(const BoundaryEdge& be) const;

  // Nodal interpolation at the Lagrange nodes. Throws Numeric on non-finite
  // values.
  Eigen::VectorXd interpolate(const ScalarFn& f, double t) const;
  Eigen::VectorXd interpolate(const VectorFn& f, double t) const;

  // Point evaluation by cell search; intended for tests and probes.
  double evaluate_scalar(const Eigen::VectorXd& coeffs, Vec2 x) const;
  Vec2 evaluate_vector(const Eigen::VectorXd& coeffs, Vec2 x) const;

  // Reference shape functions on the triangle, barycentric input (l1,l2).
  static void shape_tri(Family f, double l1, double l2, double* values);
  static void shape_tri_grad(Family f, double l1, double l2, Vec2* grads);
  // 1-D shapes on an edge, parameter s in [0,1].
  static void shape_edge(Family f, double s, double* values);
  static int tri_node_count(Family f) { return f == Family::P1 ? 3 : 6; }
  static int edge_node_count(Family f) { return f == Family::P1 ? 2 : 3; }

private:
  const Mesh2D* mesh_;
  Subdomain sub_;
  Family family_;
  int components_;
  int nodes_per_cell_;
  std::vector<int> cells_;
  std::vector<int> cell_nodes_;
  std::vector<Vec2> node_coords_;
  std::vector<int> vertex_node_;
  std::vector<int> edge_node_;
  std::vector<int> tri_cell_pos_;
};

// One essential constraint set: dofs with coordinates, components, and a
// value function evaluated as value(x, component, t).
struct BCSet {
  const FunctionSpace* space = nullptr;
  std::vector<int> dofs;
  std::vector<Vec2> coords;
  std::vector<int> comps;
  std::function<double(Vec2, int, double)> value;

  std::vector<std::pair<int, double>> evaluate(double t) const;
};

// Collects dofs whose nodes lie on edges carried by `markers`.
// `component` selects a single vector component (0 or 1) or all (-1).
BCSet dirichlet_bcs(const FunctionSpace& space, const std::vector<int>& markers,
                    ScalarFn g, int component = -1);
BCSet dirichlet_bcs(const FunctionSpace& space, const std::vector<int>& markers,
                    VectorFn g);

}  // namespace fpsi
