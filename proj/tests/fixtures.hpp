#pragma once

#include <random>

#include "dnp/pipeline.hpp"

namespace fixtures {

// Coarse torus with a hole; built once per test binary.
inline const dnp::TriMesh& torus8() {
  static const dnp::TriMesh m = dnp::build_flat_torus_with_hole(8, 0.2);
  return m;
}

inline const dnp::FemOracle& torus8_fem() {
  static const dnp::FemOracle f(torus8());
  return f;
}

inline int default_samples(const dnp::TriMesh& m) { return int(m.boundary_loop.size()) / 4 + 1; }

inline const dnp::DNMatrix& torus8_dn() {
  static const dnp::DNMatrix dn = torus8_fem().dn_map(default_samples(torus8()));
  return dn;
}

inline const dnp::BoundaryProblem& torus8_problem() {
  static const dnp::BoundaryProblem bp(torus8_dn());
  return bp;
}

inline const dnp::PipelineResult& torus8_result() {
  static const dnp::PipelineResult r = dnp::reconstruct(torus8_problem(), dnp::PipelineConfig{});
  return r;
}

// Mean-zero random grid function.
inline dnp::Vec random_mean_zero(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  dnp::Vec f(n);
  for (int j = 0; j < n; ++j) f[j] = nd(rng);
  f.array() -= f.mean();
  return f;
}

}  // namespace fixtures
