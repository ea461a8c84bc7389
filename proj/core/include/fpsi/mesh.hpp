#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "fpsi/geometry.hpp"

namespace fpsi {

enum class CellTag : int { Stokes = 0, Porous = 1 };

// Boundary markers. Values >= kCustomMarkerBase are user-defined.
namespace marker {
constexpr int kInlet = 0;
constexpr int kOutlet = 1;
constexpr int kWallLeft = 2;
constexpr int kWallRight = 3;
constexpr int kWallTop = 4;
constexpr int kWallBottom = 5;
constexpr int kInterface = 6;
constexpr int kCustomBase = 100;

std::string name(int m);
int parse(const std::string& s);
}  // namespace marker

struct BoundaryEdge {
  int v0 = -1;
  int v1 = -1;
  int marker = -1;
};

struct InterfaceEdge {
  int v0 = -1, v1 = -1;      // endpoint vertices
  int stokes_tri = -1;       // adjacent triangle in the Stokes subdomain
  int porous_tri = -1;       // adjacent triangle in the porous subdomain
  Vec2 normal_p;             // unit normal pointing out of the porous subdomain
  Vec2 tangent;              // unit tangent, tangent = rot90(normal_p)
  double length = 0.0;
};

struct InterfaceMap {
  std::vector<InterfaceEdge> edges;
  std::vector<int> trace_vertices;  // vertices along the interface, chained
  double total_length() const;
};

// Conforming triangulation of a two-subdomain geometry. Immutable after
// construction; all mutating operations return a new mesh.
class Mesh2D {
public:
  Mesh2D(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
         std::vector<CellTag> tags, std::vector<BoundaryEdge> boundary_edges);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<CellTag>& cell_tags() const { return tags_; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return bedges_; }

  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  int triangle_count() const { return static_cast<int>(triangles_.size()); }

  // Unique-edge enumeration (built once at construction).
  const std::vector<std::array<int, 2>>& edge_vertices() const { return edge_verts_; }
  const std::vector<std::array<int, 3>>& triangle_edges() const { return tri_edges_; }
  // Adjacent triangles of an edge; second entry is -1 on the boundary.
  const std::vector<std::array<int, 2>>& edge_triangles() const { return edge_tris_; }
  int edge_index(int va, int vb) const;  // -1 if absent

  const InterfaceMap& interface() const { return interface_; }

  double triangle_area(int t) const;
  Vec2 triangle_centroid(int t) const;
  double total_area() const;
  double boundary_length() const;     // length of the true outer boundary
  double max_diameter() const;        // maximal element circumdiameter
  bool vertex_in_subdomain(int v, CellTag tag) const;

  // Throws MeshInvalid when an invariant does not hold (orientation,
  // conformity, interface two-sidedness, tag coverage).
  void validate() const;

private:
  void build_edges();
  void build_interface();

  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<CellTag> tags_;
  std::vector<BoundaryEdge> bedges_;

  std::vector<std::array<int, 2>> edge_verts_;
  std::vector<std::array<int, 3>> tri_edges_;
  std::vector<std::array<int, 2>> edge_tris_;
  std::map<std::pair<int, int>, int> edge_of_;
  std::vector<char> vertex_tag_mask_;  // bit 0: touches Stokes, bit 1: touches porous
  InterfaceMap interface_;
};

struct Box {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
};

// Structured two-block mesh of two axis-aligned rectangles sharing one full
// edge. Each block is meshed with nx-by-ny cells split along alternating
// diagonals, so uniform refinement halves the element diameter exactly.
Mesh2D build_two_block_mesh(const Box& stokes_box, const Box& porous_box,
                            int nx, int ny);

Mesh2D load_mesh(const std::string& path);
void save_mesh(const Mesh2D& mesh, const std::string& path);

Mesh2D refine_uniform(const Mesh2D& mesh);

// Displaces vertices that belong to the Stokes subdomain closure; entries for
// porous-only vertices must be zero. Throws MeshTangled if any triangle
// degenerates.
Mesh2D move_nodes(const Mesh2D& mesh, const std::vector<Vec2>& displacement);

}  // namespace fpsi
