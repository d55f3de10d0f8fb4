#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dnp/mesh_geometry.hpp"

using namespace dnp;

const double kPi = std::acos(-1.0);

namespace {

double boundary_length(const TriMesh& m) {
  double L = 0;
  int nb = int(m.boundary_loop.size());
  for (int i = 0; i < nb; ++i) L += m.length(m.boundary_loop[i], m.boundary_loop[(i + 1) % nb]);
  return L;
}

bool alternating_unimodular(const Eigen::MatrixXi& J) {
  if (J != -J.transpose()) return false;
  return std::abs(det_integer(J)) == 1;
}

}  // namespace

TEST_CASE("torus with hole has one boundary and euler characteristic -1") {
  TriMesh m = build_flat_torus_with_hole(16, 0.2);
  CHECK(m.euler_characteristic() == -1);
  CHECK(m.genus == 1);
  auto r = validate(m);
  CHECK(r.ok);
  CHECK(r.boundary_components == 1);
}

TEST_CASE("hole perimeter approximates the circle") {
  TriMesh m = build_flat_torus_with_hole(8, 0.2);
  double L = boundary_length(m);
  CHECK(std::abs(L - 2 * kPi * 0.2) <= 0.05 * 2 * kPi * 0.2);
  // inscribed polygon: slightly short of the circle
  CHECK(L < 2 * kPi * 0.2);
}

TEST_CASE("torus generator rejects bad input") {
  CHECK_THROWS_AS(build_flat_torus_with_hole(16, 0.45), MeshError);
  CHECK_THROWS_AS(build_flat_torus_with_hole(7, 0.2), MeshError);
  CHECK_THROWS_AS(build_flat_torus_with_hole(16, 0.0), MeshError);
}

TEST_CASE("triangle areas from edge lengths") {
  CHECK(triangle_area(3, 4, 5) == doctest::Approx(6.0));
  CHECK(triangle_area(1, 1, 1) == doctest::Approx(std::sqrt(3.0) / 4));
  TriMesh m = build_flat_torus_with_hole(8, 0.2);
  double A = 0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) A += triangle_area(m, int(t));
  // unit square minus an inscribed 256-gon of radius 0.2
  double poly = 0.5 * 256 * 0.04 * std::sin(2 * kPi / 256);
  CHECK(A == doctest::Approx(1.0 - poly).epsilon(1e-9));
}

TEST_CASE("genus-2 mesh: euler characteristic, cycles and intersection form") {
  TriMesh m = build_genus2_with_hole(12);
  CHECK(m.genus == 2);
  CHECK(m.euler_characteristic() == -3);
  CHECK(validate(m).boundary_components == 1);
  auto cb = homology_basis(m);
  CHECK(cb.cycles.size() == 4);
  CHECK(alternating_unimodular(cb.intersection));
}

TEST_CASE("genus-2 area is three unit squares minus the hole") {
  TriMesh m = build_genus2_with_hole(4);
  double A = 0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) A += triangle_area(m, int(t));
  // the hole about the 6π cone point is three inscribed 128-gons
  double poly = 3 * 0.5 * 128 * 0.04 * std::sin(2 * kPi / 128);
  CHECK(A == doctest::Approx(3.0 - poly).epsilon(1e-9));
  double L = boundary_length(m);
  CHECK(L == doctest::Approx(3 * 128 * 2 * 0.2 * std::sin(kPi / 128)).epsilon(1e-9));
}

TEST_CASE("genus-2 generator rejects bad input") {
  CHECK_THROWS_AS(build_genus2_with_hole(5), MeshError);
  CHECK_THROWS_AS(build_genus2_with_hole(2), MeshError);
  CHECK_THROWS_AS(build_genus2_with_hole(8, 0.5), MeshError);
}

TEST_CASE("torus homology basis: two cycles with J = ±[[0,1],[-1,0]]") {
  TriMesh m = build_flat_torus_with_hole(16, 0.2);
  auto cb = homology_basis(m);
  REQUIRE(cb.cycles.size() == 2);
  CHECK(cb.intersection(0, 0) == 0);
  CHECK(cb.intersection(1, 1) == 0);
  CHECK(std::abs(cb.intersection(0, 1)) == 1);
  CHECK(cb.intersection(1, 0) == -cb.intersection(0, 1));
}

TEST_CASE("cycles avoid the boundary") {
  TriMesh m = build_flat_torus_with_hole(8, 0.2);
  auto cb = homology_basis(m);
  std::vector<char> onb(m.vertex_count, 0);
  for (int v : m.boundary_loop) onb[v] = 1;
  for (const auto& c : cb.cycles) {
    int n = int(c.vertices.size());
    CHECK(n >= 3);
    for (int i = 0; i < n; ++i) {
      CHECK_FALSE(onb[c.vertices[i]]);
      CHECK(m.has_edge(c.vertices[i], c.vertices[(i + 1) % n]));
    }
  }
}

TEST_CASE("homology basis is deterministic") {
  TriMesh m = build_flat_torus_with_hole(8, 0.2);
  auto a = homology_basis(m), b = homology_basis(m);
  REQUIRE(a.cycles.size() == b.cycles.size());
  for (std::size_t i = 0; i < a.cycles.size(); ++i) CHECK(a.cycles[i].vertices == b.cycles[i].vertices);
  CHECK(a.intersection == b.intersection);
}

TEST_CASE("disk has an empty homology basis") {
  TriMesh d = build_disk(6);
  CHECK(d.euler_characteristic() == 1);
  auto cb = homology_basis(d);
  CHECK(cb.cycles.empty());
  CHECK(cb.intersection.size() == 0);
}

TEST_CASE("wrong genus label is an inconsistency") {
  TriMesh m = build_flat_torus_with_hole(8, 0.2);
  m.genus = 2;
  CHECK_THROWS_AS(homology_basis(m), MeshError);
}

TEST_CASE("validate catches broken meshes") {
  TriMesh m = build_disk(4);
  SUBCASE("degenerate triangle") {
    m.edge_lengths[0] = 100;
    CHECK_FALSE(validate(m).ok);
  }
  SUBCASE("missing boundary loop") {
    m.boundary_loop.clear();
    CHECK_FALSE(validate(m).ok);
  }
}

TEST_CASE("integer determinant") {
  Eigen::MatrixXi a(3, 3);
  a << 2, 0, 1, 1, 3, 2, 1, 1, 2;
  CHECK(det_integer(a) == 6);
  a(2, 2) = 1;
  CHECK(det_integer(a) == 0);
  Eigen::MatrixXi s(2, 2);
  s << 0, 1, -1, 0;
  CHECK(det_integer(s) == 1);
  Eigen::MatrixXi z = Eigen::MatrixXi::Zero(2, 2);
  CHECK(det_integer(z) == 0);
}
