#pragma once

#include <optional>
#include <string>
#include <vector>

#include "canonical_form.hpp"
#include "fem_oracle.hpp"
#include "hilbert_spectrum.hpp"
#include "lattice_solver.hpp"
#include "mesh_geometry.hpp"
#include "period_assembly.hpp"

namespace dnp {

struct PipelineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every tolerance the reconstruction uses. The noisy variant derives all
// of them from ε in noise_harness.
struct PipelineConfig {
  double delta = 0.05;          // separation of exceptional eigenvalues from ±i
  double cluster_tol = 1e-6;    // merge eigenvalues closer than this
  double rounding_tol = 0.05;   // pairing values must be this close to integers
  double siegel_tol = 1e-6;
  double symmetry_tol = 1e-8;   // reject DN matrices less symmetric than this
  bool snapped = true;          // residual built from H with the ±i cluster snapped
  LatticeConfig lattice;
};

struct PipelineResult {
  GenusReport genus_report;
  EigenSystem eigen;
  std::vector<LatticePoint> lattice;
  double ball_radius = 0;
  int enlargements = 0;
  std::vector<Vec> generators;
  std::vector<BoundaryDatum> generator_data;
  PairingMatrix pairing;
  IMat reduction;
  std::vector<BoundaryDatum> canonical;
  PairingMatrix canonical_pairing;
  PeriodMatrices periods;
};

// Operators shared by every stage.
struct BoundaryProblem {
  HilbertOps ops;
  Spectrum spec;

  explicit BoundaryProblem(const DNMatrix& dn) : ops(dn), spec(spectrum(ops)) {}
};

inline void check_dn(const DNMatrix& dn, double symmetry_tol) {
  check_grid(dn);
  if (!dn.grid.is_uniform()) throw PipelineError("DN grid is not uniform in arc length");
  double s = symmetry_residual(dn);
  if (s > symmetry_tol) throw PipelineError("DN matrix is not symmetric (residual " + std::to_string(s) + ")");
  double scale = dn.matrix.cwiseAbs().maxCoeff();
  double rows = (dn.matrix * Vec::Ones(dn.grid.n)).cwiseAbs().maxCoeff();
  if (rows > 1e-8 * std::max(scale, 1e-300)) throw PipelineError("DN matrix does not annihilate constants");
}

inline Residual make_residual(const BoundaryProblem& bp, const PQSystem& pq, const PipelineConfig& cfg) {
  Mat H = cfg.snapped ? snapped_hilbert(bp.spec, cfg.delta) : bp.ops.H;
  return Residual(pq, bp.ops.grid(), bp.ops.calc.D, H);
}

inline std::vector<BoundaryDatum> data_from_points(const EigenSystem& es, const BoundaryCalculus& calc,
                                                   const Residual& res, const std::vector<Vec>& pts) {
  std::vector<BoundaryDatum> out;
  for (const auto& x : pts) {
    auto d = datum_from_params(es, calc, ParamVector::from_flat(x));
    d.residual = res.relative(x);
    out.push_back(std::move(d));
  }
  return out;
}

// Grow the ball until the generators pair unimodularly.
inline void search_lattice(const BoundaryProblem& bp, const Residual& res, const PipelineConfig& cfg,
                           double amplitude, PipelineResult& r) {
  const auto& lc = cfg.lattice;
  double R = lc.start_radius / amplitude;
  double spacing = lc.spacing / amplitude;
  std::string last;
  for (int k = 0; k <= lc.max_enlargements; ++k, R *= lc.growth) {
    r.ball_radius = R;
    r.enlargements = k;
    r.lattice = find_lattice(res, R, spacing, lc);
    std::vector<Vec> pts;
    for (const auto& p : r.lattice) pts.push_back(p.x);
    try {
      r.generators = extract_generators(pts, 2 * r.eigen.genus, lc.generator_tol);
      r.generator_data = data_from_points(r.eigen, bp.ops.calc, res, r.generators);
      r.pairing = pairing_matrix(bp.ops, r.generator_data, cfg.rounding_tol);
      r.reduction = symplectic_reduce(r.pairing.integer_matrix);
      return;
    } catch (const LatticeError& e) {
      last = e.what();
    } catch (const CanonicalError& e) {
      last = e.what();
    }
  }
  throw PipelineError("no unimodular lattice basis within the largest ball (radius " + std::to_string(R / lc.growth) +
                      "): " + last);
}

inline PipelineResult reconstruct(const BoundaryProblem& bp, const PipelineConfig& cfg) {
  PipelineResult r;
  r.genus_report = detect_genus(bp.spec, cfg.delta);
  r.eigen = exceptional_pairs(bp.ops, bp.spec, cfg.delta, cfg.cluster_tol);
  int g = r.eigen.genus;
  if (g == 0) {
    r.periods = assemble_periods(Mat(0, 0), cfg.siegel_tol);
    r.lattice = {{Vec(0), 0.0}};
    return r;
  }
  PQSystem pq = build_pq(r.eigen);
  Residual res = make_residual(bp, pq, cfg);
  search_lattice(bp, res, cfg, pq.amplitude_scale(), r);
  r.canonical = canonical_data(bp.ops, r.generator_data, r.reduction, cfg.rounding_tol);
  for (auto& d : r.canonical) d.residual = res.relative(d.params.flat());
  r.canonical_pairing = pairing_matrix(bp.ops, r.canonical, cfg.rounding_tol);
  r.periods = assemble_periods(aux_period_matrix(bp.ops, r.canonical), cfg.siegel_tol);
  return r;
}

inline PipelineResult reconstruct(const DNMatrix& dn, const PipelineConfig& cfg = {}) {
  check_dn(dn, cfg.symmetry_tol);
  BoundaryProblem bp(dn);
  return reconstruct(bp, cfg);
}

// ---------------------------------------------------------------------------
// Interior cross-checks

struct OracleContext {
  const FemOracle& fem;
  CycleBasis cycles;
  Corners corners;
  Mat E;  // grid → boundary vertices

  OracleContext(const FemOracle& f, int n)
      : fem(f), cycles(homology_basis(f.mesh())), corners(f.mesh()), E(f.interpolation(n)) {}
};

// T(B|c_j) and T(ΦB|c_j) for the interior field of a boundary datum.
struct FieldPeriods {
  Vec b_periods, rot_periods;
  double norm_sq = 0;  // ‖B‖² by interior quadrature
};

inline FieldPeriods oracle_periods(const OracleContext& oc, const HilbertOps& ops, const Vec& f) {
  auto fld = oc.fem.field_from_trace(ops.dn, ops.Lplus, ops.calc.D, oc.E, f);
  int m = int(oc.cycles.cycles.size());
  FieldPeriods p;
  p.b_periods.resize(m);
  p.rot_periods.resize(m);
  for (int j = 0; j < m; ++j) {
    // T(B|c) is the flux of u^h to the left of c, T(ΦB|c) that of u^f
    p.b_periods[j] = oc.fem.flux_left(fld.u_h, oc.cycles.cycles[j], oc.corners);
    p.rot_periods[j] = oc.fem.flux_left(fld.u_f, oc.cycles.cycles[j], oc.corners);
  }
  p.norm_sq = oc.fem.interior_inner(fld.B, fld.B);
  return p;
}

// Same periods by the edge-average rule on the piecewise-constant fields.
inline FieldPeriods oracle_periods_average(const OracleContext& oc, const HilbertOps& ops, const Vec& f) {
  auto fld = oc.fem.field_from_trace(ops.dn, ops.Lplus, ops.calc.D, oc.E, f);
  auto rb = FemOracle::rotate(fld.B);
  int m = int(oc.cycles.cycles.size());
  FieldPeriods p;
  p.b_periods.resize(m);
  p.rot_periods.resize(m);
  for (int j = 0; j < m; ++j) {
    p.b_periods[j] = oc.fem.period(fld.B, oc.cycles.cycles[j]);
    p.rot_periods[j] = oc.fem.period(rb, oc.cycles.cycles[j]);
  }
  p.norm_sq = oc.fem.interior_inner(fld.B, fld.B);
  return p;
}

struct OracleAux {
  Mat aux;           // N·Q
  Mat b_periods;     // P_ij = T(B_i|c_j)
  Mat rot_periods;   // Q_ji = T(ΦB_i|c_j)
  Mat dual;          // N = P⁻ᵀ, rows are the cycles l_j in the mesh basis
  double integrality = 0;  // max distance of P from integers
  double dual_intersection_defect = 0;  // max |N J Nᵀ − Ω| over the two orientations
};

// 𝔅 from interior periods: the cycles l_j dual to the canonical fields,
// T(B_i|l_j) = δ_ij, read off the integer period matrix.
inline OracleAux oracle_aux_period_matrix(const OracleContext& oc, const HilbertOps& ops,
                                          const std::vector<BoundaryDatum>& canonical, bool average_rule = false) {
  int m = int(canonical.size());
  if (int(oc.cycles.cycles.size()) != m) throw PipelineError("mesh cycle count does not match the genus");
  OracleAux o;
  o.b_periods.resize(m, m);
  o.rot_periods.resize(m, m);
  for (int i = 0; i < m; ++i) {
    auto p = average_rule ? oracle_periods_average(oc, ops, canonical[i].f) : oracle_periods(oc, ops, canonical[i].f);
    o.b_periods.row(i) = p.b_periods.transpose();
    o.rot_periods.col(i) = p.rot_periods;
  }
  Mat P = o.b_periods.array().round().matrix();
  o.integrality = (o.b_periods - P).cwiseAbs().maxCoeff();
  if (std::abs(P.determinant()) < 0.5) throw PipelineError("period matrix of the canonical fields is singular");
  o.dual = P.inverse().transpose();
  o.aux = o.dual * o.rot_periods;
  Mat J = oc.cycles.intersection.cast<double>();
  Mat NJN = o.dual * J * o.dual.transpose();
  Mat Om = standard_symplectic(m / 2).cast<double>();
  o.dual_intersection_defect = std::min((NJN - Om).cwiseAbs().maxCoeff(), (NJN + Om).cwiseAbs().maxCoeff());
  return o;
}

// (X_j, X_i) against T(X_j)ᵀ J⁻¹ T(−ΦX_i) on the tangent harmonic basis;
// returns the largest relative deviation.
struct BilinearCheck {
  Mat interior, boundary_form;
  double relative_error = 0;
};

inline BilinearCheck riemann_bilinear_check(const FemOracle& fem, const CycleBasis& cb) {
  BilinearCheck b;
  int m = int(cb.cycles.size());
  if (m == 0) return b;
  auto jf = fem.tangent_harmonic_basis(cb);
  Corners cn(fem.mesh());
  Mat T(m, m), F(m, m);  // T(k, i) = T(X_i|c_k), F(k, i) = T(−ΦX_i|c_k)
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) {
      T(k, i) = fem.period(jf.fields[i], cb.cycles[k]);
      F(k, i) = fem.flux_left_cochain(jf.cochains[i], cb.cycles[k], cn);
    }
  Mat Jinv = cb.intersection.cast<double>().inverse();
  b.interior.resize(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) b.interior(j, i) = fem.interior_inner(jf.fields[j], jf.fields[i]);
  b.boundary_form = T.transpose() * Jinv * F;
  b.relative_error = (b.interior - b.boundary_form).norm() / b.interior.norm();
  return b;
}

}  // namespace dnp
