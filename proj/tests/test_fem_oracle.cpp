#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fixtures.hpp"

using namespace dnp;

namespace {

// Planar coordinates of disk vertices, recovered from the ring layout.
std::vector<Eigen::Vector2d> disk_positions(int rings) {
  std::vector<Eigen::Vector2d> pos{{0, 0}};
  for (int k = 1; k <= rings; ++k)
    for (int j = 0; j < 6 * k; ++j) {
      double th = 2 * kPi * j / (6 * k);
      pos.emplace_back(double(k) / rings * std::cos(th), double(k) / rings * std::sin(th));
    }
  return pos;
}

}  // namespace

TEST_CASE("cotan Laplacian annihilates constants and is symmetric") {
  FemOracle fem(build_disk(8));
  const auto& K = fem.laplacian();
  Vec one = Vec::Ones(K.rows());
  CHECK((K * one).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((Mat(K) - Mat(K).transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("harmonic extension reproduces linear functions on a flat disk") {
  int rings = 10;
  TriMesh d = build_disk(rings);
  FemOracle fem(d);
  auto pos = disk_positions(rings);
  Vec fb(d.boundary_loop.size());
  for (std::size_t i = 0; i < d.boundary_loop.size(); ++i) {
    auto p = pos[d.boundary_loop[i]];
    fb[i] = 2 * p.x() - p.y() + 0.5;
  }
  Vec u = fem.harmonic_extension(fb);
  double err = 0;
  for (int v = 0; v < d.vertex_count; ++v) err = std::max(err, std::abs(u[v] - (2 * pos[v].x() - pos[v].y() + 0.5)));
  CHECK(err < 1e-10);
  CHECK(fem.interior_residual(u) < 1e-12);
  CHECK_THROWS_AS(fem.harmonic_extension(Vec::Zero(3)), FemError);
}

TEST_CASE("gradient of a linear function is constant") {
  int rings = 6;
  TriMesh d = build_disk(rings);
  FemOracle fem(d);
  auto pos = disk_positions(rings);
  Vec u(d.vertex_count);
  for (int v = 0; v < d.vertex_count; ++v) u[v] = 3 * pos[v].x() + pos[v].y();
  auto g = fem.gradient(u);
  // frames are intrinsic, so only the length is frame independent
  for (const auto& x : g) CHECK(x.norm() == doctest::Approx(std::sqrt(10.0)).epsilon(1e-10));
}

TEST_CASE("trigonometric interpolation is exact on grid nodes") {
  int n = 17;
  double L = 2.0;
  std::vector<double> s;
  for (int j = 0; j < n; ++j) s.push_back(L * j / n);
  Mat E = trig_interpolation(s, n, L);
  CHECK((E - Mat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
  std::vector<double> t{0.123, 1.7};
  Mat F = trig_interpolation(t, n, L);
  Vec f(n);
  for (int j = 0; j < n; ++j) f[j] = std::sin(2 * kPi * 3 * (L * j / n) / L);
  Vec v = F * f;
  CHECK(v[0] == doctest::Approx(std::sin(2 * kPi * 3 * 0.123 / L)).epsilon(1e-10));
  CHECK(v[1] == doctest::Approx(std::sin(2 * kPi * 3 * 1.7 / L)).epsilon(1e-10));
}

TEST_CASE("disk DN map from FEM approaches the analytic multiplier") {
  // Λ cos(kθ) = k cos(kθ) on the unit disk; P1 error is O(h²)
  TriMesh d = build_disk(24);
  FemOracle fem(d);
  int n = int(d.boundary_loop.size()) / 4 + 1;
  auto dn = fem.dn_map(n);
  CHECK(symmetry_residual(dn) < 1e-12);
  CHECK((dn.matrix * Vec::Ones(n)).cwiseAbs().maxCoeff() < 1e-10);
  double L = dn.grid.total_length;
  CHECK(L == doctest::Approx(2 * kPi).epsilon(1e-3));
  for (int k : {1, 2, 4}) {
    Vec f(n);
    for (int j = 0; j < n; ++j) f[j] = std::cos(2 * kPi * k * j / n);
    double rq = f.dot(dn.matrix * f) / f.squaredNorm();
    double expect = 2 * kPi * k / L;
    CHECK(std::abs(rq - expect) / expect < 0.01 * k);
  }
}

TEST_CASE("DN map of the torus: symmetric, nonnegative, kills constants") {
  const auto& dn = fixtures::torus8_dn();
  CHECK(symmetry_residual(dn) < 1e-12);
  CHECK((dn.matrix * Vec::Ones(dn.grid.n)).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::SelfAdjointEigenSolver<Mat> es(dn.matrix);
  CHECK(es.eigenvalues().minCoeff() > -1e-10);
  CHECK(es.eigenvalues()(1) > 1e-3);  // only the constant is in the kernel
}

TEST_CASE("lambda pseudo-inverse on mean-zero functions") {
  auto dn = disk_analytic_dn(24);
  Mat Lp = lambda_pinv(dn);
  Mat P = Mat::Identity(24, 24) - Mat::Constant(24, 24, 1.0 / 24);
  CHECK((Lp * dn.matrix - P).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("tangent harmonic basis on the torus") {
  const auto& fem = fixtures::torus8_fem();
  auto cb = homology_basis(fem.mesh());
  auto jf = fem.tangent_harmonic_basis(cb);
  REQUIRE(jf.fields.size() == 2);
  CHECK(jf.divergence_residual < 1e-10);
  CHECK(jf.boundary_flux_residual < 1e-10);
  // unit jump across its own cycle: periods along the cycles reproduce J
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      double p = cochain_along(fem.mesh(), jf.cochains[i], cb.cycles[k]);
      CHECK(p == doctest::Approx(double(cb.intersection(i, k))).epsilon(1e-9));
    }
  for (const auto& x : jf.fields) CHECK(fem.boundary_normal_ratio(x) < 0.05);
}

TEST_CASE("bilinear identity on the tangent harmonic basis") {
  const auto& fem = fixtures::torus8_fem();
  auto cb = homology_basis(fem.mesh());
  auto b = riemann_bilinear_check(fem, cb);
  CHECK(b.relative_error < 1e-8);
  // Gram matrix of the fields is symmetric positive definite
  CHECK((b.interior - b.interior.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(b.interior.determinant() > 0);
}

TEST_CASE("gradients have zero periods") {
  const auto& fem = fixtures::torus8_fem();
  const auto& m = fem.mesh();
  auto cb = homology_basis(m);
  std::mt19937_64 rng(3);
  Vec fb = fixtures::random_mean_zero(int(m.boundary_loop.size()), rng);
  Vec u = fem.harmonic_extension(fb);
  auto g = fem.gradient(u);
  for (const auto& c : cb.cycles) CHECK(std::abs(fem.period(g, c)) < 1e-10 * fb.cwiseAbs().maxCoeff());
}

TEST_CASE("rotation is a quarter turn") {
  PwField x{{1, 0}, {0, 2}};
  auto r = FemOracle::rotate(x);
  CHECK(r[0].isApprox(Eigen::Vector2d(0, 1)));
  CHECK(r[1].isApprox(Eigen::Vector2d(-2, 0)));
}
