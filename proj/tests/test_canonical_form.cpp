#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fixtures.hpp"

using namespace dnp;

namespace {

// Random unimodular integer matrix from elementary row operations.
IMat random_unimodular(int m, std::mt19937_64& rng, int steps = 12) {
  IMat N = IMat::Identity(m, m);
  std::uniform_int_distribution<int> idx(0, m - 1), val(-2, 2), coin(0, 3);
  for (int s = 0; s < steps; ++s) {
    int i = idx(rng), j = idx(rng);
    if (coin(rng) == 0) {
      N.row(i).swap(N.row(j));
    } else if (i != j) {
      N.row(i) += val(rng) * N.row(j);
    }
  }
  return N;
}

}  // namespace

TEST_CASE("standard symplectic matrix") {
  IMat O = standard_symplectic(2);
  IMat expect(4, 4);
  expect << 0, 0, 1, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, -1, 0, 0;
  CHECK(O == expect);
  CHECK(det_integer(O) == 1);
  CHECK(standard_symplectic(0).size() == 0);
}

TEST_CASE("reduction of scrambled forms") {
  std::mt19937_64 rng(17);
  for (int g = 1; g <= 3; ++g)
    for (int t = 0; t < 10; ++t) {
      IMat N = random_unimodular(2 * g, rng);
      IMat A = N * standard_symplectic(g) * N.transpose();
      IMat M = symplectic_reduce(A);
      CHECK(M * A * M.transpose() == standard_symplectic(g));
      CHECK(std::llabs(det_integer(M)) == 1);
    }
}

TEST_CASE("reduction handles the negative orientation") {
  IMat A = -standard_symplectic(1);
  IMat M = symplectic_reduce(A);
  CHECK(M * A * M.transpose() == standard_symplectic(1));
  IMat expect(2, 2);
  expect << 0, 1, 1, 0;
  CHECK(M == expect);
}

TEST_CASE("reduction rejects bad forms") {
  CHECK_THROWS_WITH_AS(symplectic_reduce(IMat(2 * standard_symplectic(1))), doctest::Contains("unimodular"),
                       CanonicalError);
  IMat sym(2, 2);
  sym << 0, 1, 1, 0;
  CHECK_THROWS_WITH_AS(symplectic_reduce(sym), doctest::Contains("alternating"), CanonicalError);
  CHECK_THROWS_AS(symplectic_reduce(IMat::Zero(3, 3)), CanonicalError);
  // rank-deficient genus-2 form: det 0
  IMat deg = IMat::Zero(4, 4);
  deg(0, 2) = 1;
  deg(2, 0) = -1;
  CHECK_THROWS_AS(symplectic_reduce(deg), CanonicalError);
}

TEST_CASE("pairing is alternating and the Gram form is positive") {
  const auto& bp = fixtures::torus8_problem();
  const auto& r = fixtures::torus8_result();
  REQUIRE(r.generator_data.size() == 2);
  const auto& a = r.generator_data[0];
  const auto& b = r.generator_data[1];
  CHECK(std::abs(pairing(bp.ops, a, a)) < 1e-8);
  CHECK(pairing(bp.ops, a, b) == doctest::Approx(-pairing(bp.ops, b, a)).epsilon(1e-8));
  CHECK(gram(bp.ops, a, b) == doctest::Approx(gram(bp.ops, b, a)).epsilon(1e-8));
  CHECK(gram(bp.ops, a, a) > 0);
  CHECK(gram(bp.ops, b, b) > 0);
}

TEST_CASE("generators pair to ±1 and canonical data pair to Ω") {
  const auto& r = fixtures::torus8_result();
  CHECK(std::abs(std::abs(r.pairing.real_matrix(0, 1)) - 1.0) <= 0.05);
  CHECK(r.pairing.max_rounding_error <= 0.05);
  CHECK(r.reduction * r.pairing.integer_matrix * r.reduction.transpose() == standard_symplectic(1));
  CHECK(r.canonical_pairing.integer_matrix == standard_symplectic(1));
  CHECK(r.canonical_pairing.max_rounding_error <= 0.05);
}

TEST_CASE("combination is linear in the data") {
  const auto& r = fixtures::torus8_result();
  Eigen::RowVectorXi c(2);
  c << 2, -1;
  auto d = combine(r.generator_data, c);
  CHECK((d.f - (2 * r.generator_data[0].f - r.generator_data[1].f)).norm() < 1e-12);
  CHECK((d.params.flat() - (2 * r.generators[0] - r.generators[1])).norm() < 1e-12);
}

TEST_CASE("pairing matrix refuses non-integral values") {
  const auto& bp = fixtures::torus8_problem();
  const auto& r = fixtures::torus8_result();
  auto data = r.generator_data;
  data[1].f *= 0.5;
  data[1].b_nu *= 0.5;
  CHECK_THROWS_WITH_AS(pairing_matrix(bp.ops, data, 0.05), doctest::Contains("near integers"), CanonicalError);
}
