#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "fpsi/errors.hpp"
#include "fpsi/mesh.hpp"
#include "test_helpers.hpp"

using namespace fpsi;

TEST_CASE("smallest stacked-squares mesh: 4 triangles, 1 interface edge") {
  const Mesh2D m = testutil::stacked_squares();
  CHECK(m.triangle_count() == 4);
  CHECK(m.interface().edges.size() == 1);
  CHECK(m.total_area() == doctest::Approx(2.0).epsilon(1e-14));
  const auto& e = m.interface().edges[0];
  CHECK(e.normal_p.x == doctest::Approx(0.0));
  CHECK(e.normal_p.y == doctest::Approx(-1.0));
  CHECK(e.tangent.x == doctest::Approx(1.0));
  m.validate();
}

TEST_CASE("verification geometry h ladder matches the reported diameters") {
  Mesh2D m = testutil::verification_mesh(0);
  const double expected[] = {0.2795, 0.1398, 0.0699, 0.0349, 0.0175};
  for (int level = 0; level < 5; ++level) {
    if (level > 0) m = refine_uniform(m);
    CHECK(m.max_diameter() == doctest::Approx(expected[level]).epsilon(2e-3));
    if (level >= 2) break;  // refinement halves h exactly; levels 3-4 follow
  }
  CHECK(testutil::verification_mesh(0).max_diameter() ==
        doctest::Approx(std::sqrt(5.0) / 8.0).epsilon(1e-14));
}

TEST_CASE("refinement: counts, tags, area and boundary length preserved") {
  const Mesh2D m = testutil::stacked_squares();
  const Mesh2D r = refine_uniform(m);
  CHECK(r.triangle_count() == 16);
  CHECK(r.interface().edges.size() == 2);
  CHECK(r.total_area() == doctest::Approx(m.total_area()).epsilon(1e-13));
  CHECK(r.boundary_length() == doctest::Approx(m.boundary_length()).epsilon(1e-12));
  CHECK(r.max_diameter() == doctest::Approx(0.5 * m.max_diameter()).epsilon(1e-13));
  int stokes = 0;
  for (auto t : r.cell_tags())
    if (t == CellTag::Stokes) ++stokes;
  CHECK(stokes == 8);
  r.validate();
}

TEST_CASE("interface normals are antiparallel across every edge") {
  const Mesh2D m = testutil::verification_mesh(1);
  for (const auto& e : m.interface().edges) {
    // Recompute the Stokes-side outward normal and compare.
    const Vec2 p0 = m.vertices()[e.v0], p1 = m.vertices()[e.v1];
    Vec2 n_s = rot90(p1 - p0) / norm(p1 - p0);
    const Vec2 mid = (p0 + p1) * 0.5;
    if (dot(mid - m.triangle_centroid(e.stokes_tri), n_s) < 0.0) n_s = n_s * -1.0;
    CHECK(norm(n_s + e.normal_p) < 1e-14);
    CHECK(std::abs(norm(e.normal_p) - 1.0) < 1e-14);
    CHECK(std::abs(dot(e.normal_p, e.tangent)) < 1e-14);
  }
}

TEST_CASE("two-block mesh argument and geometry errors") {
  CHECK_THROWS_WITH_AS(build_two_block_mesh({0, 0, 1, 1}, {0, 1, 1, 2}, 0, 1),
                       doctest::Contains(">= 1"), Error);
  try {
    build_two_block_mesh({0, 0, 1, 1}, {0, 5, 1, 6}, 1, 1);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Geometry);
  }
}

TEST_CASE("fracture-style geometry: tags partition the rectangle") {
  // Stacked blocks side by side also exercise the vertical interface.
  const Mesh2D m = build_two_block_mesh({0, 0, 1.524, 6.096}, {1.524, 0, 3.048, 6.096},
                                        5, 20);
  CHECK(m.total_area() == doctest::Approx(3.048 * 6.096).epsilon(1e-12));
  int stokes = 0, porous = 0;
  for (auto t : m.cell_tags()) (t == CellTag::Stokes ? stokes : porous)++;
  CHECK(stokes + porous == m.triangle_count());
  CHECK(stokes > 0);
  CHECK(porous > 0);
  CHECK(m.interface().edges.size() == 20);
}

TEST_CASE("mesh file round trip") {
  const Mesh2D m = testutil::stacked_squares();
  const std::string path = "roundtrip.m2d";
  save_mesh(m, path);
  const Mesh2D r = load_mesh(path);
  CHECK(r.triangle_count() == m.triangle_count());
  CHECK(r.vertex_count() == m.vertex_count());
  CHECK(r.total_area() == doctest::Approx(m.total_area()).epsilon(1e-14));
  CHECK(r.interface().edges.size() == m.interface().edges.size());
  std::remove(path.c_str());
}

TEST_CASE("loader rejects a clockwise triangle") {
  const std::string path = "bad_orientation.m2d";
  {
    std::ofstream out(path);
    out << "mesh2d 1\nvertices 3\n0 0\n1 0\n0 1\ntriangles 1\n0 2 1 0\n"
        << "boundary_edges 0\n";
  }
  try {
    load_mesh(path);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MeshInvalid);
    CHECK(std::string(e.what()).find("0") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("loader rejects an interface edge between two porous cells") {
  const std::string path = "bad_interface.m2d";
  {
    std::ofstream out(path);
    // Two porous triangles sharing the edge (1,2), wrongly marked INTERFACE.
    out << "mesh2d 1\nvertices 4\n0 0\n1 0\n0 1\n1 1\n"
        << "triangles 2\n0 1 2 1\n1 3 2 1\n"
        << "boundary_edges 1\n1 2 INTERFACE\n";
  }
  try {
    load_mesh(path);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MeshInvalid);
    CHECK(std::string(e.what()).find("STOKES") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("loader rejects malformed files") {
  const std::string path = "truncated.m2d";
  {
    std::ofstream out(path);
    out << "mesh2d 1\nvertices 3\n0 0\n1 0\n";
  }
  try {
    load_mesh(path);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Format);
  }
  std::remove(path.c_str());
}

TEST_CASE("move_nodes: identity, translation consistency, tangling") {
  const Mesh2D m = testutil::stacked_squares(2, 2);

  std::vector<Vec2> zero(m.vertex_count());
  const Mesh2D same = move_nodes(m, zero);
  for (int v = 0; v < m.vertex_count(); ++v)
    CHECK(norm(same.vertices()[v] - m.vertices()[v]) == 0.0);

  // Uniform shift of the whole fluid block, interface vertices included:
  // fluid cells translate rigidly, the adjacent porous row absorbs the shift.
  std::vector<Vec2> shift(m.vertex_count());
  for (int v = 0; v < m.vertex_count(); ++v)
    if (m.vertex_in_subdomain(v, CellTag::Stokes)) shift[v] = {0.0, 0.1};
  const Mesh2D moved = move_nodes(m, shift);
  moved.validate();
  double stokes_area = 0.0;
  for (int t = 0; t < moved.triangle_count(); ++t)
    if (moved.cell_tags()[t] == CellTag::Stokes) stokes_area += moved.triangle_area(t);
  CHECK(stokes_area == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(moved.total_area() == doctest::Approx(1.9).epsilon(1e-12));

  // Large downward interface motion on a coarse mesh inverts elements.
  std::vector<Vec2> crush(m.vertex_count());
  for (int v = 0; v < m.vertex_count(); ++v)
    if (m.vertex_in_subdomain(v, CellTag::Stokes)) crush[v] = {0.0, 0.6};
  try {
    move_nodes(m, crush);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MeshTangled);
  }

  // Nonzero displacement on a porous-only vertex is rejected.
  std::vector<Vec2> bad(m.vertex_count());
  for (int v = 0; v < m.vertex_count(); ++v)
    if (!m.vertex_in_subdomain(v, CellTag::Stokes)) bad[v] = {0.0, 0.1};
  CHECK_THROWS_AS(move_nodes(m, bad), Error);
}
