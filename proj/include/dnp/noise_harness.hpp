#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pipeline.hpp"

namespace dnp {

struct NoiseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class NoiseModel { random_symmetric, smooth_multiplicative };

inline const char* to_string(NoiseModel m) {
  return m == NoiseModel::random_symmetric ? "random_symmetric" : "smooth_multiplicative";
}

inline NoiseModel noise_model_from_string(const std::string& s) {
  if (s == "random_symmetric") return NoiseModel::random_symmetric;
  if (s == "smooth_multiplicative") return NoiseModel::smooth_multiplicative;
  throw NoiseError("unknown noise model `" + s + "`");
}

struct NoiseSpec {
  double epsilon = 0;
  NoiseModel model = NoiseModel::random_symmetric;
  std::uint64_t seed = 0;
};

// ‖W_{L₂} E W_{H¹}⁻¹‖₂ in the unitary Fourier basis, weights (1 + k²)^{1/2}
// for the integer frequency k.
inline double h1_to_l2_norm(const Mat& E) {
  int n = int(E.rows());
  CMat F(n, n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) F(j, l) = std::polar(1.0 / std::sqrt(double(n)), -2 * kPi * double(j) * l / n);
  CMat A = F * E.cast<cplx>() * F.adjoint();
  for (int k = 0; k < n; ++k) {
    int freq = k <= n / 2 ? k : k - n;
    A.col(k) /= std::sqrt(1.0 + double(freq) * freq);
  }
  Eigen::JacobiSVD<CMat> svd(A);
  return svd.singularValues()(0);
}

inline DNMatrix perturb(const DNMatrix& dn, const NoiseSpec& spec) {
  if (!(spec.epsilon >= 0)) throw NoiseError("epsilon must be nonnegative");
  if (spec.epsilon == 0) return dn;
  int n = dn.grid.n;
  double lam = h1_to_l2_norm(dn.matrix);
  if (spec.epsilon >= 0.1 * lam) throw NoiseError("epsilon exceeds a tenth of the DN surrogate norm");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  Mat P = Mat::Identity(n, n) - Mat::Constant(n, n, 1.0 / n);
  Mat E;
  if (spec.model == NoiseModel::random_symmetric) {
    Mat X(n, n);
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) X(j, l) = normal(rng);
    E = P * (0.5 * (X + X.transpose())) * P;
  } else {
    Vec m = Vec::Zero(n);
    for (int k = 0; k <= 4; ++k) {
      double a = normal(rng), b = normal(rng);
      for (int j = 0; j < n; ++j) {
        double th = 2 * kPi * k * j / n;
        m[j] += a * std::cos(th) + b * std::sin(th);
      }
    }
    Mat ML = m.asDiagonal() * dn.matrix;
    E = P * (0.5 * (ML + ML.transpose())) * P;
  }
  double s = h1_to_l2_norm(E);
  if (!(s > 0)) throw NoiseError("noise calibration failed: zero perturbation");
  E *= spec.epsilon / s;
  DNMatrix out = dn;
  out.matrix += E;
  double check = h1_to_l2_norm(out.matrix - dn.matrix);
  if (std::abs(check - spec.epsilon) > 0.01 * spec.epsilon) throw NoiseError("noise calibration failed");
  return out;
}

// The only place where √ε enters: every threshold is floored by the
// noiseless value and raised to √ε.
inline PipelineConfig noisy_config(double epsilon, const PipelineConfig& base = {}) {
  double r = std::sqrt(std::max(0.0, epsilon));
  PipelineConfig c = base;
  c.delta = std::max(base.delta, r);
  c.cluster_tol = std::max(base.cluster_tol, r);
  c.rounding_tol = std::max(base.rounding_tol, r);
  c.lattice.tol_relative = std::max(base.lattice.tol_relative, r);
  c.lattice.dedup_radius = std::max(base.lattice.dedup_radius, r);
  return c;
}

inline PipelineResult reconstruct_noisy(const BoundaryProblem& bp, double epsilon, const PipelineConfig& base = {}) {
  PipelineConfig cfg = noisy_config(epsilon, base);
  auto rep = detect_genus(bp.spec, cfg.delta);
  if (rep.ambiguous && epsilon > 0)
    throw NoiseError("genus unstable at this noise: an eigenvalue lies in the band around the threshold");
  return reconstruct(bp, cfg);
}

inline PipelineResult reconstruct_noisy(const DNMatrix& dn, double epsilon, const PipelineConfig& base = {}) {
  check_dn(dn, base.symmetry_tol);
  BoundaryProblem bp(dn);
  return reconstruct_noisy(bp, epsilon, base);
}

// ϰ coordinates of the reference expressed against the noisy eigenfunctions:
// η′_k ≈ e^{iφ_k}η_k, so the coefficient c_k becomes c_k e^{−iφ_k}.
inline Vec transfer_params(const Vec& x, const EigenSystem& ref, const EigenSystem& noisy, const BoundaryGrid& g) {
  int gg = ref.genus;
  if (noisy.genus != gg) throw NoiseError("genus mismatch during basis matching");
  ParamVector p = ParamVector::from_flat(x);
  for (int k = 0; k < gg; ++k) {
    cplx ov = inner(g, noisy.etas[k], ref.etas[k]);
    cplx rot = std::abs(ov) > 0 ? ov / std::abs(ov) : cplx(1, 0);
    cplx c = p.coefficient(k) * std::conj(rot);
    p.alphas[k] = c.real();
    p.betas[k] = c.imag();
  }
  return p.flat();
}

struct SweepRow {
  double epsilon = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  int genus_detected = -1;
  double error = std::numeric_limits<double>::quiet_NaN();
  double match_distance = std::numeric_limits<double>::quiet_NaN();
  std::string status;
  bool valid() const { return status == "ok"; }
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<double> epsilons, medians;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double genus_rate_small = 0;  // fraction of correct genus at ε ≤ 1e−3
};

struct SweepOptions {
  std::vector<double> epsilons{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  int trials = 5;
  NoiseModel model = NoiseModel::random_symmetric;
  std::uint64_t seed = 1;
  double max_match_distance = 0.3;
  PipelineConfig base;
};

// One noisy trial compared with the reference in the reference marking.
inline SweepRow sweep_trial(const DNMatrix& dn, const PipelineResult& ref, const BoundaryGrid& grid, double eps,
                            int trial, std::uint64_t seed, const SweepOptions& opt) {
  SweepRow row;
  row.epsilon = eps;
  row.trial = trial;
  row.seed = seed;
  try {
    DNMatrix dn2 = perturb(dn, {eps, opt.model, seed});
    BoundaryProblem bp(dn2);
    PipelineConfig cfg = noisy_config(eps, opt.base);
    auto rep = detect_genus(bp.spec, cfg.delta);
    row.genus_detected = rep.genus;
    if (rep.genus != ref.eigen.genus) {
      row.status = "genus_mismatch";
      return row;
    }
    PipelineResult nz;
    try {
      nz = reconstruct_noisy(bp, eps, opt.base);
    } catch (const std::exception& e) {
      row.status = std::string("pipeline_failed: ") + e.what();
      return row;
    }
    PQSystem pq = build_pq(nz.eigen);
    Residual res = make_residual(bp, pq, cfg);
    int m = 2 * nz.eigen.genus;
    Mat G(m, m);
    for (int j = 0; j < m; ++j) G.col(j) = nz.generators[j];
    auto lu = G.fullPivLu();
    std::vector<Vec> matched;
    double dist = 0;
    for (const auto& d : ref.canonical) {
      Vec target = transfer_params(d.params.flat(), ref.eigen, nz.eigen, grid);
      Vec z = lu.solve(target).array().round().matrix();
      Vec x = descend(res, G * z, cfg.lattice.max_iter).x;
      dist = std::max(dist, (x - target).norm() / std::max(target.norm(), 1e-300));
      matched.push_back(x);
    }
    row.match_distance = dist;
    if (dist > opt.max_match_distance) {
      row.status = "match_far";
      return row;
    }
    auto data = data_from_points(nz.eigen, bp.ops.calc, res, matched);
    auto pm = pairing_matrix(bp.ops, data, cfg.rounding_tol);
    if (pm.integer_matrix != standard_symplectic(m / 2)) {
      row.status = "matched_basis_not_canonical";
      return row;
    }
    auto per = assemble_periods(aux_period_matrix(bp.ops, data), cfg.siegel_tol);
    row.error = (per.bmat - ref.periods.bmat).norm();
    row.status = "ok";
  } catch (const std::exception& e) {
    row.status = std::string("failed: ") + e.what();
  }
  return row;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) continue;
    double a = std::log(x[i]), b = std::log(y[i]);
    sx += a, sy += b, sxx += a * a, sxy += a * b;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline SweepResult stability_sweep(const DNMatrix& dn, const SweepOptions& opt) {
  if (!std::is_sorted(opt.epsilons.begin(), opt.epsilons.end())) throw NoiseError("epsilon list must be ascending");
  check_dn(dn, opt.base.symmetry_tol);
  BoundaryProblem bp(dn);
  PipelineResult ref = reconstruct(bp, opt.base);
  if (ref.eigen.genus == 0) throw NoiseError("sweep needs a surface of positive genus");
  SweepResult out;
  int small = 0, small_ok = 0;
  for (std::size_t i = 0; i < opt.epsilons.size(); ++i) {
    double eps = opt.epsilons[i];
    std::vector<double> errs;
    for (int t = 0; t < opt.trials; ++t) {
      std::uint64_t seed = opt.seed * 1000003ULL + i * 1000ULL + std::uint64_t(t);
      auto row = sweep_trial(dn, ref, bp.ops.grid(), eps, t, seed, opt);
      if (row.valid()) errs.push_back(row.error);
      if (eps <= 1e-3 * (1 + 1e-12)) {
        ++small;
        small_ok += row.genus_detected == ref.eigen.genus;
      }
      out.rows.push_back(row);
    }
    out.epsilons.push_back(eps);
    out.medians.push_back(median(errs));
  }
  out.slope = loglog_slope(out.epsilons, out.medians);
  out.genus_rate_small = small ? double(small_ok) / small : 0.0;
  return out;
}

inline std::string sweep_csv(const SweepResult& s) {
  std::ostringstream os;
  os << "epsilon,trial,seed,genus_detected,error_frobenius,match_distance,status\n";
  os.precision(10);
  for (const auto& r : s.rows) {
    std::string st = r.status;
    std::replace(st.begin(), st.end(), ',', ';');
    std::replace(st.begin(), st.end(), '\n', ' ');
    os << r.epsilon << ',' << r.trial << ',' << r.seed << ',' << r.genus_detected << ',' << r.error << ','
       << r.match_distance << ',' << st << '\n';
  }
  return os.str();
}

}  // namespace dnp
