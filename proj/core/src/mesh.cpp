#include "fpsi/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fpsi/errors.hpp"

namespace fpsi {

namespace marker {

std::string name(int m) {
  switch (m) {
    case kInlet: return "INLET";
    case kOutlet: return "OUTLET";
    case kWallLeft: return "WALL_LEFT";
    case kWallRight: return "WALL_RIGHT";
    case kWallTop: return "WALL_TOP";
    case kWallBottom: return "WALL_BOTTOM";
    case kInterface: return "INTERFACE";
    default: return "CUSTOM(" + std::to_string(m) + ")";
  }
}

int parse(const std::string& s) {
  if (s == "INLET") return kInlet;
  if (s == "OUTLET") return kOutlet;
  if (s == "WALL_LEFT") return kWallLeft;
  if (s == "WALL_RIGHT") return kWallRight;
  if (s == "WALL_TOP") return kWallTop;
  if (s == "WALL_BOTTOM") return kWallBottom;
  if (s == "INTERFACE") return kInterface;
  try {
    const int v = std::stoi(s);
    require(v >= kCustomBase, ErrorCode::Format,
            "custom marker must be an integer >= 100, got " + s);
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::Format, "unknown boundary marker '" + s + "'");
  }
}

}  // namespace marker

double InterfaceMap::total_length() const {
  double l = 0.0;
  for (const auto& e : edges) l += e.length;
  return l;
}

Mesh2D::Mesh2D(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
               std::vector<CellTag> tags, std::vector<BoundaryEdge> boundary_edges)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      tags_(std::move(tags)),
      bedges_(std::move(boundary_edges)) {
  require(triangles_.size() == tags_.size(), ErrorCode::MeshInvalid,
          "cell tag list does not cover all triangles");
  build_edges();
  build_interface();
  validate();
}

void Mesh2D::build_edges() {
  edge_of_.clear();
  edge_verts_.clear();
  tri_edges_.assign(triangles_.size(), {-1, -1, -1});
  for (int t = 0; t < triangle_count(); ++t) {
    const auto& tri = triangles_[t];
    for (int e = 0; e < 3; ++e) {
      // Edge e is opposite local vertex e.
      const int a = tri[(e + 1) % 3];
      const int b = tri[(e + 2) % 3];
      const auto key = std::minmax(a, b);
      auto it = edge_of_.find(key);
      int id;
      if (it == edge_of_.end()) {
        id = static_cast<int>(edge_verts_.size());
        edge_verts_.push_back({key.first, key.second});
        edge_of_.emplace(key, id);
      } else {
        id = it->second;
      }
      tri_edges_[t][e] = id;
    }
  }
  edge_tris_.assign(edge_verts_.size(), {-1, -1});
  for (int t = 0; t < triangle_count(); ++t) {
    for (int e = 0; e < 3; ++e) {
      auto& adj = edge_tris_[tri_edges_[t][e]];
      if (adj[0] < 0) {
        adj[0] = t;
      } else {
        require(adj[1] < 0, ErrorCode::MeshInvalid,
                "edge " + std::to_string(tri_edges_[t][e]) +
                    " shared by more than two triangles");
        adj[1] = t;
      }
    }
  }
  vertex_tag_mask_.assign(vertices_.size(), 0);
  for (int t = 0; t < triangle_count(); ++t) {
    const char bit = tags_[t] == CellTag::Stokes ? 1 : 2;
    for (int v : triangles_[t]) vertex_tag_mask_[v] |= bit;
  }
}

int Mesh2D::edge_index(int va, int vb) const {
  const auto it = edge_of_.find(std::minmax(va, vb));
  return it == edge_of_.end() ? -1 : it->second;
}

void Mesh2D::build_interface() {
  interface_.edges.clear();
  for (const auto& be : bedges_) {
    if (be.marker != marker::kInterface) continue;
    InterfaceEdge ie;
    ie.v0 = be.v0;
    ie.v1 = be.v1;
    const int eid = edge_index(be.v0, be.v1);
    require(eid >= 0, ErrorCode::MeshInvalid,
            "interface edge (" + std::to_string(be.v0) + "," + std::to_string(be.v1) +
                ") is not an edge of any triangle");
    const auto adj = edge_tris_[eid];
    require(adj[0] >= 0 && adj[1] >= 0, ErrorCode::MeshInvalid,
            "interface edge (" + std::to_string(be.v0) + "," + std::to_string(be.v1) +
                ") is not interior to the mesh");
    int st = -1, pt = -1;
    for (int t : {adj[0], adj[1]}) {
      if (tags_[t] == CellTag::Stokes) st = t;
      if (tags_[t] == CellTag::Porous) pt = t;
    }
    require(st >= 0 && pt >= 0, ErrorCode::MeshInvalid,
            "interface edge (" + std::to_string(be.v0) + "," + std::to_string(be.v1) +
                ") must separate one STOKES and one POROUS triangle");
    ie.stokes_tri = st;
    ie.porous_tri = pt;
    const Vec2 p0 = vertices_[be.v0];
    const Vec2 p1 = vertices_[be.v1];
    const Vec2 ev = p1 - p0;
    ie.length = norm(ev);
    require(ie.length > 0.0, ErrorCode::MeshInvalid, "degenerate interface edge");
    Vec2 n = rot90(ev) / ie.length;
    // Orient n out of the porous triangle.
    const Vec2 mid = (p0 + p1) * 0.5;
    if (dot(mid - triangle_centroid(pt), n) < 0.0) n = n * (-1.0);
    ie.normal_p = n;
    ie.tangent = rot90(n);
    interface_.edges.push_back(ie);
  }

  // Chain the trace vertices; multiple chains are concatenated.
  std::map<int, std::vector<int>> nbrs;
  for (const auto& e : interface_.edges) {
    nbrs[e.v0].push_back(e.v1);
    nbrs[e.v1].push_back(e.v0);
  }
  interface_.trace_vertices.clear();
  std::map<int, bool> seen;
  auto walk = [&](int start) {
    int prev = -1, cur = start;
    while (cur >= 0 && !seen[cur]) {
      seen[cur] = true;
      interface_.trace_vertices.push_back(cur);
      int next = -1;
      for (int n : nbrs[cur])
        if (n != prev && !seen[n]) { next = n; break; }
      prev = cur;
      cur = next;
    }
  };
  for (const auto& [v, vs] : nbrs)
    if (vs.size() == 1 && !seen[v]) walk(v);
  for (const auto& [v, vs] : nbrs)
    if (!seen[v]) walk(v);
}

double Mesh2D::triangle_area(int t) const {
  const auto& tri = triangles_[t];
  const Vec2 a = vertices_[tri[0]], b = vertices_[tri[1]], c = vertices_[tri[2]];
  return 0.5 * cross(b - a, c - a);
}

Vec2 Mesh2D::triangle_centroid(int t) const {
  const auto& tri = triangles_[t];
  return (vertices_[tri[0]] + vertices_[tri[1]] + vertices_[tri[2]]) / 3.0;
}

double Mesh2D::total_area() const {
  double s = 0.0;
  for (int t = 0; t < triangle_count(); ++t) s += triangle_area(t);
  return s;
}

double Mesh2D::boundary_length() const {
  double l = 0.0;
  for (size_t e = 0; e < edge_verts_.size(); ++e) {
    if (edge_tris_[e][1] >= 0) continue;
    l += norm(vertices_[edge_verts_[e][1]] - vertices_[edge_verts_[e][0]]);
  }
  return l;
}

double Mesh2D::max_diameter() const {
  double h = 0.0;
  for (int t = 0; t < triangle_count(); ++t) {
    const auto& tri = triangles_[t];
    const Vec2 A = vertices_[tri[0]], B = vertices_[tri[1]], C = vertices_[tri[2]];
    const double a = norm(B - C), b = norm(C - A), c = norm(A - B);
    const double area = triangle_area(t);
    h = std::max(h, a * b * c / (2.0 * area));  // circumdiameter
  }
  return h;
}

bool Mesh2D::vertex_in_subdomain(int v, CellTag tag) const {
  const char bit = tag == CellTag::Stokes ? 1 : 2;
  return (vertex_tag_mask_[v] & bit) != 0;
}

void Mesh2D::validate() const {
  for (int t = 0; t < triangle_count(); ++t) {
    require(triangle_area(t) > 0.0, ErrorCode::MeshInvalid,
            "triangle " + std::to_string(t) + " is degenerate or clockwise");
  }
  // Conformity is implied by the unique-edge construction (build_edges throws
  // when an edge has more than two adjacent triangles); re-check counts here.
  for (size_t e = 0; e < edge_verts_.size(); ++e) {
    require(edge_tris_[e][0] >= 0, ErrorCode::MeshInvalid,
            "edge " + std::to_string(e) + " has no adjacent triangle");
  }
  for (const auto& be : bedges_) {
    require(be.v0 >= 0 && be.v0 < vertex_count() && be.v1 >= 0 && be.v1 < vertex_count(),
            ErrorCode::MeshInvalid, "boundary edge references unknown vertex");
    const int eid = edge_index(be.v0, be.v1);
    require(eid >= 0, ErrorCode::MeshInvalid,
            "boundary edge (" + std::to_string(be.v0) + "," + std::to_string(be.v1) +
                ") is not a mesh edge");
    if (be.marker != marker::kInterface) {
      require(edge_tris_[eid][1] < 0, ErrorCode::MeshInvalid,
              "marked edge (" + std::to_string(be.v0) + "," + std::to_string(be.v1) +
                  ") is interior but not an interface");
    }
  }
  // Interface invariants: checked during construction; verify unit vectors.
  for (const auto& ie : interface_.edges) {
    require(std::abs(norm(ie.normal_p) - 1.0) < 1e-14 &&
                std::abs(norm(ie.tangent) - 1.0) < 1e-14 &&
                std::abs(dot(ie.normal_p, ie.tangent)) < 1e-14,
            ErrorCode::MeshInvalid, "interface frame not orthonormal");
  }
}

namespace {

enum class Diag { Slash, Backslash };

struct MeshBuilder {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> tris;
  std::vector<CellTag> tags;
  std::vector<BoundaryEdge> bedges;
  std::map<std::pair<double, double>, int> vid;

  int vertex(Vec2 p) {
    auto it = vid.find({p.x, p.y});
    if (it != vid.end()) return it->second;
    const int id = static_cast<int>(vertices.size());
    vertices.push_back(p);
    vid.emplace(std::make_pair(p.x, p.y), id);
    return id;
  }

  void add_block(const Box& box, int nx, int ny, CellTag tag) {
    auto px = [&](int i) { return box.x0 + (box.x1 - box.x0) * i / nx; };
    auto py = [&](int j) { return box.y0 + (box.y1 - box.y0) * j / ny; };
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const int v00 = vertex({px(i), py(j)});
        const int v10 = vertex({px(i + 1), py(j)});
        const int v01 = vertex({px(i), py(j + 1)});
        const int v11 = vertex({px(i + 1), py(j + 1)});
        if ((i + j) % 2 == 0) {
          tris.push_back({v00, v10, v11});
          tris.push_back({v00, v11, v01});
        } else {
          tris.push_back({v00, v10, v01});
          tris.push_back({v10, v11, v01});
        }
        tags.push_back(tag);
        tags.push_back(tag);
      }
    }
  }
};

bool close(double a, double b) { return std::abs(a - b) < 1e-12; }

}  // namespace

Mesh2D build_two_block_mesh(const Box& sb, const Box& pb, int nx, int ny) {
  require(nx >= 1 && ny >= 1, ErrorCode::Argument, "nx and ny must be >= 1");
  require(sb.x1 > sb.x0 && sb.y1 > sb.y0 && pb.x1 > pb.x0 && pb.y1 > pb.y0,
          ErrorCode::Geometry, "boxes must have positive extent");

  // Identify the shared edge: stacked (porous above/below) or side by side.
  bool stacked = false, shared_found = false;
  if (close(sb.x0, pb.x0) && close(sb.x1, pb.x1) &&
      (close(sb.y1, pb.y0) || close(pb.y1, sb.y0))) {
    stacked = true;
    shared_found = true;
  } else if (close(sb.y0, pb.y0) && close(sb.y1, pb.y1) &&
             (close(sb.x1, pb.x0) || close(pb.x1, sb.x0))) {
    shared_found = true;
  }
  require(shared_found, ErrorCode::Geometry, "boxes do not share exactly one full edge");

  MeshBuilder b;
  b.add_block(sb, nx, ny, CellTag::Stokes);
  b.add_block(pb, nx, ny, CellTag::Porous);

  const Box un{std::min(sb.x0, pb.x0), std::min(sb.y0, pb.y0),
               std::max(sb.x1, pb.x1), std::max(sb.y1, pb.y1)};
  const double shared_coord = stacked ? (close(sb.y1, pb.y0) ? sb.y1 : pb.y1)
                                      : (close(sb.x1, pb.x0) ? sb.x1 : pb.x1);

  // Mark outer edges by geometric side of the union and the shared line as
  // the interface. A temporary mesh provides edge adjacency.
  Mesh2D tmp(b.vertices, b.tris, b.tags, {});
  std::vector<BoundaryEdge> bedges;
  for (size_t e = 0; e < tmp.edge_vertices().size(); ++e) {
    const int va = tmp.edge_vertices()[e][0];
    const int vb = tmp.edge_vertices()[e][1];
    const Vec2 a = b.vertices[va], c = b.vertices[vb];
    const bool interior = tmp.edge_triangles()[e][1] >= 0;
    if (interior) {
      const bool on_shared =
          stacked ? (close(a.y, shared_coord) && close(c.y, shared_coord))
                  : (close(a.x, shared_coord) && close(c.x, shared_coord));
      if (on_shared &&
          tmp.cell_tags()[tmp.edge_triangles()[e][0]] != tmp.cell_tags()[tmp.edge_triangles()[e][1]])
        bedges.push_back({va, vb, marker::kInterface});
      continue;
    }
    int m = -1;
    if (close(a.x, un.x0) && close(c.x, un.x0)) m = marker::kWallLeft;
    else if (close(a.x, un.x1) && close(c.x, un.x1)) m = marker::kWallRight;
    else if (close(a.y, un.y0) && close(c.y, un.y0)) m = marker::kWallBottom;
    else if (close(a.y, un.y1) && close(c.y, un.y1)) m = marker::kWallTop;
    require(m >= 0, ErrorCode::Geometry, "outer edge not on the union boundary");
    bedges.push_back({va, vb, m});
  }
  return Mesh2D(std::move(b.vertices), std::move(b.tris), std::move(b.tags),
                std::move(bedges));
}

Mesh2D load_mesh(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Format, "cannot open mesh file " + path);
  std::string word;
  int version = 0;
  in >> word >> version;
  require(in.good() && word == "mesh2d" && version == 1, ErrorCode::Format,
          "bad mesh header in " + path);

  auto expect = [&](const char* key) {
    in >> word;
    require(in.good() && word == key, ErrorCode::Format,
            std::string("expected '") + key + "' in " + path);
    long n = -1;
    in >> n;
    require(in.good() && n >= 0, ErrorCode::Format,
            std::string("bad count after '") + key + "' in " + path);
    return n;
  };

  const long nv = expect("vertices");
  std::vector<Vec2> verts(nv);
  for (auto& v : verts) {
    in >> v.x >> v.y;
    require(in.good(), ErrorCode::Format, "truncated vertex list in " + path);
  }
  const long nt = expect("triangles");
  std::vector<std::array<int, 3>> tris(nt);
  std::vector<CellTag> tags(nt);
  for (long t = 0; t < nt; ++t) {
    int tag = -1;
    in >> tris[t][0] >> tris[t][1] >> tris[t][2] >> tag;
    require(in.good(), ErrorCode::Format, "truncated triangle list in " + path);
    require(tag == 0 || tag == 1, ErrorCode::Format,
            "triangle " + std::to_string(t) + " has unknown tag " + std::to_string(tag));
    tags[t] = static_cast<CellTag>(tag);
    for (int v : tris[t])
      require(v >= 0 && v < nv, ErrorCode::Format,
              "triangle " + std::to_string(t) + " references unknown vertex");
  }
  const long nb = expect("boundary_edges");
  std::vector<BoundaryEdge> bedges(nb);
  for (long e = 0; e < nb; ++e) {
    in >> bedges[e].v0 >> bedges[e].v1 >> word;
    require(in.good(), ErrorCode::Format, "truncated boundary edge list in " + path);
    bedges[e].marker = marker::parse(word);
  }
  return Mesh2D(std::move(verts), std::move(tris), std::move(tags), std::move(bedges));
}

void save_mesh(const Mesh2D& mesh, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot write mesh file " + path);
  out.precision(17);
  out << "mesh2d 1\n";
  out << "vertices " << mesh.vertex_count() << "\n";
  for (const auto& v : mesh.vertices()) out << v.x << " " << v.y << "\n";
  out << "triangles " << mesh.triangle_count() << "\n";
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    out << tri[0] << " " << tri[1] << " " << tri[2] << " "
        << static_cast<int>(mesh.cell_tags()[t]) << "\n";
  }
  out << "boundary_edges " << mesh.boundary_edges().size() << "\n";
  for (const auto& be : mesh.boundary_edges()) {
    out << be.v0 << " " << be.v1 << " ";
    if (be.marker >= marker::kCustomBase)
      out << be.marker << "\n";
    else
      out << marker::name(be.marker) << "\n";
  }
  require(out.good(), ErrorCode::Io, "write failure on " + path);
}

Mesh2D refine_uniform(const Mesh2D& mesh) {
  std::vector<Vec2> verts = mesh.vertices();
  const int nv = mesh.vertex_count();
  // Midpoint vertex of every edge.
  std::vector<int> mid(mesh.edge_vertices().size());
  for (size_t e = 0; e < mesh.edge_vertices().size(); ++e) {
    const auto ev = mesh.edge_vertices()[e];
    mid[e] = nv + static_cast<int>(e);
    verts.push_back((mesh.vertices()[ev[0]] + mesh.vertices()[ev[1]]) * 0.5);
  }

  std::vector<std::array<int, 3>> tris;
  std::vector<CellTag> tags;
  tris.reserve(4 * mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const auto& te = mesh.triangle_edges()[t];
    const int m0 = mid[te[0]], m1 = mid[te[1]], m2 = mid[te[2]];
    tris.push_back({tri[0], m2, m1});
    tris.push_back({m2, tri[1], m0});
    tris.push_back({m1, m0, tri[2]});
    tris.push_back({m0, m1, m2});
    for (int k = 0; k < 4; ++k) tags.push_back(mesh.cell_tags()[t]);
  }

  std::vector<BoundaryEdge> bedges;
  bedges.reserve(2 * mesh.boundary_edges().size());
  for (const auto& be : mesh.boundary_edges()) {
    const int e = mesh.edge_index(be.v0, be.v1);
    bedges.push_back({be.v0, mid[e], be.marker});
    bedges.push_back({mid[e], be.v1, be.marker});
  }
  return Mesh2D(std::move(verts), std::move(tris), std::move(tags), std::move(bedges));
}

Mesh2D move_nodes(const Mesh2D& mesh, const std::vector<Vec2>& displacement) {
  require(displacement.size() == mesh.vertices().size(), ErrorCode::Argument,
          "displacement must be given for every vertex");
  std::vector<Vec2> verts = mesh.vertices();
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const Vec2 d = displacement[v];
    if (!mesh.vertex_in_subdomain(v, CellTag::Stokes)) {
      require(d.x == 0.0 && d.y == 0.0, ErrorCode::Argument,
              "nonzero displacement on porous-only vertex " + std::to_string(v));
      continue;
    }
    verts[v] += d;
  }
  std::vector<std::array<int, 3>> tris = mesh.triangles();
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Vec2 a = verts[tris[t][0]], b = verts[tris[t][1]], c = verts[tris[t][2]];
    require(0.5 * cross(b - a, c - a) > 0.0, ErrorCode::MeshTangled,
            "triangle " + std::to_string(t) + " inverted by mesh motion");
  }
  return Mesh2D(std::move(verts), std::move(tris), mesh.cell_tags(), mesh.boundary_edges());
}

}  // namespace fpsi
