#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fixtures.hpp"

using namespace dnp;

namespace {

double lambda_norm(const DNMatrix& dn, const Vec& f) { return std::sqrt(lambda_inner(dn, f, f).real()); }

}  // namespace

TEST_CASE("disk: H maps e_k to i sign(k) e_k") {
  int n = 64;
  HilbertOps ops(disk_analytic_dn(n));
  double err = 0;
  for (int k = -ops.grid().kmax(); k <= ops.grid().kmax(); ++k) {
    if (k == 0) continue;
    CVec e(n);
    for (int j = 0; j < n; ++j) e[j] = std::polar(1.0, 2 * kPi * k * j / n);
    CVec r = ops.H.cast<cplx>() * e - cplx(0, k > 0 ? 1 : -1) * e;
    err = std::max(err, r.cwiseAbs().maxCoeff());
  }
  CHECK(err < 1e-10);
}

TEST_CASE("disk: H and H⁻¹ are inverse on mean-zero functions") {
  int n = 33;
  HilbertOps ops(disk_analytic_dn(n));
  Mat P = Mat::Identity(n, n) - Mat::Constant(n, n, 1.0 / n);
  CHECK((ops.H * ops.Hinv - P).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((ops.Hinv * ops.H - P).cwiseAbs().maxCoeff() < 1e-10);
  // H² = −1 on mean-zero functions of the disk
  CHECK((ops.H * ops.H + P).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("disk: spectrum is ±1 and genus 0") {
  HilbertOps ops(disk_analytic_dn(128));
  auto s = spectrum(ops);
  CHECK(s.mus.size() == 2 * ops.grid().kmax());
  for (int i = 0; i < s.mus.size(); ++i) CHECK(std::abs(std::abs(s.mus[i]) - 1.0) < 1e-10);
  auto rep = detect_genus(s, 0.05);
  CHECK(rep.genus == 0);
  CHECK_FALSE(rep.ambiguous);
  CHECK(exceptional_pairs(ops, s, 0.05).genus == 0);
}

TEST_CASE("eigenvalue classification") {
  CHECK(classify({0, 0}, 0.05) == EigClass::zero);
  CHECK(classify({0, 1.01}, 0.05) == EigClass::plus_i);
  CHECK(classify({0, -0.97}, 0.05) == EigClass::minus_i);
  CHECK(classify({0, 0.7}, 0.05) == EigClass::exceptional);
  CHECK(std::string(to_string(EigClass::exceptional)) == "exceptional");
}

TEST_CASE("genus detection with a synthetic spectrum") {
  Spectrum s;
  s.mus.resize(6);
  s.mus << -1.4, -1.0, -0.77, 0.77, 1.0, 1.4;
  CHECK(detect_genus(s, 0.05).genus == 2);
  CHECK(detect_genus(s, 0.25).genus == 1);
  // 0.77 sits 0.23 from 1: inside [δ/2, δ] for δ = 0.3
  auto r = detect_genus(s, 0.3);
  CHECK(r.genus == 1);
  CHECK(r.ambiguous);
  CHECK_THROWS_AS(detect_genus(s, 0.0), SpectrumError);
}

TEST_CASE("torus: H is anti-hermitian in the Λ product") {
  const auto& bp = fixtures::torus8_problem();
  const auto& dn = bp.ops.dn;
  std::mt19937_64 rng(11);
  double worst = 0;
  for (int t = 0; t < 20; ++t) {
    Vec f = fixtures::random_mean_zero(dn.grid.n, rng), h = fixtures::random_mean_zero(dn.grid.n, rng);
    cplx a = lambda_inner(dn, Vec(bp.ops.H * f), h) + lambda_inner(dn, f, Vec(bp.ops.H * h));
    worst = std::max(worst, std::abs(a) / (lambda_norm(dn, f) * lambda_norm(dn, h)));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("torus: one exceptional pair, symmetric about zero") {
  const auto& bp = fixtures::torus8_problem();
  auto rep = detect_genus(bp.spec, 0.05);
  CHECK(rep.genus == 1);
  CHECK_FALSE(rep.ambiguous);
  auto es = exceptional_pairs(bp.ops, bp.spec, 0.05);
  REQUIRE(es.genus == 1);
  CHECK(es.mus[0] > 0);
  CHECK(es.mus[0] < 0.95);
  CHECK(es.pairing_defect < 1e-8);
  CHECK(es.residuals[0] < 1e-8);
  CHECK(l2norm(bp.ops.grid(), es.etas[0]) == doctest::Approx(1.0));
  // phase convention: the dominant Fourier coefficient is real positive
  CVec c = bp.spec.Q.adjoint() * es.etas[0];
  Eigen::Index k;
  c.cwiseAbs().maxCoeff(&k);
  CHECK(std::abs(c[k].imag()) < 1e-12);
  CHECK(c[k].real() > 0);
}

TEST_CASE("torus: conjugate eigenfunction carries -μ") {
  const auto& bp = fixtures::torus8_problem();
  auto es = exceptional_pairs(bp.ops, bp.spec, 0.05);
  REQUIRE(es.genus == 1);
  CMat L = bp.ops.dn.matrix.cast<cplx>(), D = bp.ops.calc.D.cast<cplx>();
  CVec eb = es.etas[0].conjugate();
  CVec r = D * eb + cplx(0, es.mus[0]) * (L * eb);
  CHECK(l2norm(bp.ops.grid(), r) < 1e-8 * l2norm(bp.ops.grid(), CVec(L * eb)));
}

TEST_CASE("snapped H: exact ±i away from the exceptional pair") {
  const auto& bp = fixtures::torus8_problem();
  Mat Ht = snapped_hilbert(bp.spec, 0.05);
  // anti-hermitian in Λ and equal to H on the exceptional eigenvectors
  auto es = exceptional_pairs(bp.ops, bp.spec, 0.05);
  CVec d = Ht.cast<cplx>() * es.etas[0] - bp.ops.H.cast<cplx>() * es.etas[0];
  CHECK(l2norm(bp.ops.grid(), d) < 1e-8);
  Mat A = bp.ops.dn.matrix * Ht;
  CHECK((A + A.transpose()).cwiseAbs().maxCoeff() < 1e-8 * A.cwiseAbs().maxCoeff());
  // H̃² = −1 on the orthogonal complement of the pair
  CMat X = bp.spec.vectors();
  int checked = 0;
  for (int i = 0; i < bp.spec.mus.size(); ++i) {
    if (std::abs(std::abs(bp.spec.mus[i]) - 1.0) > 0.05) continue;
    CVec v = X.col(i);
    CVec r = Ht.cast<cplx>() * (Ht.cast<cplx>() * v) + v;
    CHECK(r.norm() < 1e-8 * v.norm());
    ++checked;
  }
  CHECK(checked == bp.spec.mus.size() - 2);
}

TEST_CASE("mismatched DN matrix is rejected") {
  DNMatrix dn = disk_analytic_dn(8);
  dn.matrix = Mat::Zero(7, 7);
  CHECK_THROWS_AS(HilbertOps{dn}, BoundaryError);
}
