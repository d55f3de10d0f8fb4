#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hilbert_spectrum.hpp"

namespace dnp {

struct LatticeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ϰ = (α₁..α_g, β₁..β_g); the k-th coefficient is α_k + iβ_k.
struct ParamVector {
  Vec alphas, betas;

  int genus() const { return int(alphas.size()); }
  Vec flat() const {
    Vec x(2 * genus());
    x << alphas, betas;
    return x;
  }
  static ParamVector from_flat(const Vec& x) {
    if (x.size() % 2) throw LatticeError("parameter vector must have even length");
    int g = int(x.size()) / 2;
    return {x.head(g), x.tail(g)};
  }
  static ParamVector zero(int g) { return {Vec::Zero(g), Vec::Zero(g)}; }
  cplx coefficient(int k) const { return {alphas[k], betas[k]}; }
};

// p_k, q_k with their exponents. The exponents are the continuous logs,
// branch fixed by construction, so p_k^α = exp(α log p_k) needs no unwrapping.
struct PQSystem {
  std::vector<CVec> log_p, log_q;
  std::vector<CVec> ps, qs;
  int genus() const { return int(log_p.size()); }
  // exponent functions ordered like ParamVector::flat()
  std::vector<CVec> exponents() const {
    std::vector<CVec> e = log_p;
    e.insert(e.end(), log_q.begin(), log_q.end());
    return e;
  }
  // sqrt(Σ ‖Re ℓ_j‖∞²): growth rate of |Π| per unit of ϰ
  double amplitude_scale() const {
    double s = 0;
    for (const auto& l : exponents()) s += std::pow(l.real().cwiseAbs().maxCoeff(), 2);
    return std::sqrt(s);
  }
};

struct BoundaryDatum {
  ParamVector params;
  Vec f, b_nu;
  double residual = 0;
};

inline PQSystem build_pq(const EigenSystem& es, double max_exponent = 700) {
  PQSystem pq;
  for (int k = 0; k < es.genus; ++k) {
    double mu = es.mus[k];
    const CVec& eta = es.etas[k];
    CVec eb = eta.conjugate();
    CVec lp = cplx(0, -2 * kPi) * ((1 + mu) * eta + (1 - mu) * eb);
    CVec lq = cplx(2 * kPi, 0) * ((mu + 1) * eta + (mu - 1) * eb);
    double big = std::max(lp.real().cwiseAbs().maxCoeff(), lq.real().cwiseAbs().maxCoeff());
    if (big > max_exponent)
      throw LatticeError("p/q exponent reaches " + std::to_string(big) +
                         "; rescale the eigenfunctions (L2 normalization on a shorter boundary)");
    pq.log_p.push_back(lp);
    pq.log_q.push_back(lq);
    pq.ps.push_back(lp.array().exp().matrix());
    pq.qs.push_back(lq.array().exp().matrix());
  }
  return pq;
}

// 𝓔(ϰ) = ‖∂_γ(H − i)Π‖ with Π = exp(Σ ϰ_j ℓ_j), plus its Jacobian.
class Residual {
 public:
  Residual(const PQSystem& pq, const BoundaryGrid& grid, const Mat& D, const Mat& H)
      : grid_(grid), ell_(pq.exponents()) {
    CMat Hc = H.cast<cplx>();
    Hc.diagonal().array() -= cplx(0, 1);
    op_ = D.cast<cplx>() * Hc;
    D_ = D.cast<cplx>();
  }

  int dim() const { return int(ell_.size()); }

  CVec product(const Vec& x) const {
    CVec e = CVec::Zero(grid_.n);
    for (int j = 0; j < dim(); ++j) e += x[j] * ell_[j];
    return e.array().exp().matrix();
  }
  CVec vector(const Vec& x) const { return op_ * product(x); }
  double value(const Vec& x) const { return l2norm(grid_, vector(x)); }
  // ‖∂_γΠ‖, the size 𝓔 is measured against
  double scale(const Vec& x) const { return l2norm(grid_, D_ * product(x)); }
  double relative(const Vec& x) const {
    double s = scale(x);
    return s > 0 ? value(x) / s : 0.0;
  }

  // residual and Jacobian stacked as real vectors, weighted by √w
  void linearize(const Vec& x, Vec& r, Mat& J) const {
    int n = grid_.n, m = dim();
    CVec P = product(x);
    CVec rc = op_ * P;
    double sw = std::sqrt(grid_.weight());
    r.resize(2 * n);
    r << sw * rc.real(), sw * rc.imag();
    CMat T(n, m);
    for (int j = 0; j < m; ++j) T.col(j) = ell_[j].cwiseProduct(P);
    CMat Jc = op_ * T;
    J.resize(2 * n, m);
    J << sw * Jc.real(), sw * Jc.imag();
  }

 private:
  BoundaryGrid grid_;
  std::vector<CVec> ell_;
  CMat op_, D_;
};

struct DescentResult {
  Vec x;
  double value = 0, relative = 0;
  int iterations = 0;
  bool converged = false;
};

// Levenberg–Marquardt on ½‖r‖².
inline DescentResult descend(const Residual& res, Vec x, int max_iter = 200, double step_tol = 1e-12) {
  DescentResult out;
  Vec r;
  Mat J;
  res.linearize(x, r, J);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  int it = 0;
  for (; it < max_iter; ++it) {
    Mat A = J.transpose() * J;
    Vec g = J.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 30 && !improved; ++tries) {
      Mat Ad = A;
      Ad.diagonal() += lambda * A.diagonal().cwiseMax(1e-300);
      Vec dx = Ad.ldlt().solve(-g);
      if (!dx.allFinite()) {
        lambda *= 10;
        continue;
      }
      Vec xn = x + dx;
      Vec rn;
      Mat Jn;
      res.linearize(xn, rn, Jn);
      double cn = rn.squaredNorm();
      if (std::isfinite(cn) && cn < cost) {
        double step = dx.norm();
        x = xn;
        r = rn;
        J = Jn;
        cost = cn;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (step < step_tol * std::max(1.0, x.norm())) {
          out.converged = true;
          it = max_iter;
        }
      } else {
        lambda *= 10;
      }
    }
    if (!improved) {
      out.converged = true;
      break;
    }
  }
  out.x = x;
  out.iterations = it;
  out.value = std::sqrt(cost);
  out.relative = res.relative(x);
  return out;
}

struct LatticeConfig {
  double tol_relative = 1e-3;  // accept a minimum when 𝓔/‖∂_γΠ‖ is below this
  double dedup_radius = 1e-2;
  double start_radius = 6.0;   // ball radius and start spacing in units of 1/amplitude_scale
  double spacing = 1.5;
  double growth = 1.25;
  double generator_tol = 0.05;  // integer-combination test on lattice coordinates
  int max_enlargements = 8;
  int max_iter = 200;
};

struct LatticePoint {
  Vec x;
  double relative = 0;
};

// Multistart descent from a uniform grid inside the ball |ϰ| ≤ R.
inline std::vector<LatticePoint> find_lattice(const Residual& res, double radius, double spacing,
                                              const LatticeConfig& cfg) {
  if (!(radius > 0)) throw LatticeError("ball radius must be positive");
  int m = res.dim();
  std::vector<LatticePoint> found{{Vec::Zero(m), 0.0}};
  if (m == 0) return found;
  int steps = int(std::floor(radius / spacing));
  std::vector<int> idx(m, -steps);
  std::vector<LatticePoint> raw;
  while (true) {
    Vec x0(m);
    for (int j = 0; j < m; ++j) x0[j] = idx[j] * spacing;
    if (x0.norm() <= radius && x0.norm() > 0) {
      auto d = descend(res, x0, cfg.max_iter);
      if (d.x.allFinite() && d.x.norm() <= radius && d.relative <= cfg.tol_relative)
        raw.push_back({d.x, d.relative});
    }
    int j = 0;
    while (j < m && ++idx[j] > steps) idx[j++] = -steps;
    if (j == m) break;
  }
  std::sort(raw.begin(), raw.end(), [](const LatticePoint& a, const LatticePoint& b) {
    return std::lexicographical_compare(a.x.data(), a.x.data() + a.x.size(), b.x.data(), b.x.data() + b.x.size());
  });
  for (const auto& p : raw) {
    bool dup = false;
    for (auto& q : found)
      if ((q.x - p.x).norm() <= cfg.dedup_radius) {
        if (p.relative < q.relative && q.x.norm() > 0) q = p;
        dup = true;
        break;
      }
    if (!dup) found.push_back(p);
  }
  return found;
}

// Lattice basis from sample points by consensus: among bases drawn from the
// shortest points, keep the one under which the most points have integer
// coordinates (coarsest lattice on ties), then refit it over those points.
// Noise produces isolated near-zeros off the lattice; they drop out here.
inline std::vector<Vec> extract_generators(const std::vector<Vec>& points, int dim, double tol = 0.05,
                                           int pool_size = 12) {
  std::vector<Vec> pts;
  for (const auto& p : points)
    if (p.size() != dim) throw LatticeError("point dimension mismatch");
    else if (p.norm() > 1e-9) pts.push_back(p);
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) { return a.norm() < b.norm(); });
  std::vector<Vec> pool;  // one representative per ± pair
  for (const auto& p : pts) {
    if (int(pool.size()) == pool_size) break;
    bool seen = false;
    for (const auto& q : pool) seen = seen || (p + q).norm() <= tol * q.norm();
    if (!seen) pool.push_back(p);
  }
  int rank = 0;
  if (!pool.empty()) {
    Mat P(dim, pool.size());
    for (std::size_t j = 0; j < pool.size(); ++j) P.col(j) = pool[j];
    Eigen::FullPivLU<Mat> plu(P);
    plu.setThreshold(1e-6);
    rank = int(plu.rank());
  }
  if (rank < dim)
    throw LatticeError("found points span rank " + std::to_string(rank) + " < " + std::to_string(dim) +
                       "; enlarge the search ball");
  int best_in = -1;
  double best_det = 0, best_fit = 0;
  Mat B;
  std::vector<int> idx(dim);
  for (int j = 0; j < dim; ++j) idx[j] = j;
  int np = int(pool.size());
  while (true) {
    Mat C(dim, dim);
    double scale = 1;
    for (int j = 0; j < dim; ++j) {
      C.col(j) = pool[idx[j]];
      scale *= pool[idx[j]].norm();
    }
    Eigen::FullPivLU<Mat> lu(C);
    double det = std::abs(lu.determinant());
    if (det > 1e-6 * scale) {
      int in = 0;
      double fit = 0;
      for (const auto& p : pts) {
        Vec c = lu.solve(p);
        double off = (c - c.array().round().matrix()).cwiseAbs().maxCoeff();
        if (off <= tol) ++in, fit += off;
      }
      bool better = in > best_in || (in == best_in && det > best_det * (1 + 1e-3)) ||
                    (in == best_in && det >= best_det * (1 - 1e-3) && fit < best_fit);
      if (better) best_in = in, best_det = det, best_fit = fit, B = C;
    }
    int k = dim - 1;
    while (k >= 0 && idx[k] == np - dim + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < dim; ++j) idx[j] = idx[j - 1] + 1;
  }
  if (best_in < 0) throw LatticeError("no well-conditioned basis among the found points");
  {
    // least-squares refit over the inliers
    auto lu = B.fullPivLu();
    Mat P(dim, 0), Z(dim, 0);
    for (const auto& p : pts) {
      Vec c = lu.solve(p);
      Vec r = c.array().round().matrix();
      if ((c - r).cwiseAbs().maxCoeff() > tol) continue;
      P.conservativeResize(Eigen::NoChange, P.cols() + 1);
      Z.conservativeResize(Eigen::NoChange, Z.cols() + 1);
      P.col(P.cols() - 1) = p;
      Z.col(Z.cols() - 1) = r;
    }
    B = (Z * Z.transpose()).ldlt().solve(Z * P.transpose()).transpose();
  }
  // pairwise size reduction until no generator shortens
  for (bool changed = true; changed;) {
    changed = false;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        if (i == j) continue;
        double t = std::round(B.col(i).dot(B.col(j)) / B.col(j).squaredNorm());
        if (t != 0 && (B.col(i) - t * B.col(j)).norm() < B.col(i).norm() - 1e-12) {
          B.col(i) -= t * B.col(j);
          changed = true;
        }
      }
  }
  std::vector<Vec> gens;
  for (int j = 0; j < dim; ++j) {
    Vec v = B.col(j);
    Eigen::Index k;
    v.cwiseAbs().maxCoeff(&k);
    if (v[k] < 0) v = -v;
    gens.push_back(v);
  }
  std::sort(gens.begin(), gens.end(), [](const Vec& a, const Vec& b) {
    if (std::abs(a.norm() - b.norm()) > 1e-9 * std::max(1.0, a.norm())) return a.norm() < b.norm();
    return std::lexicographical_compare(b.data(), b.data() + b.size(), a.data(), a.data() + a.size());
  });
  return gens;
}

// (B_ν, f) from ϰ. The conjugate term carries (μ − μ⁻¹) so that B_ν is real
// and equals −∂_γ(H + H⁻¹)f.
inline BoundaryDatum datum_from_params(const EigenSystem& es, const BoundaryCalculus& calc, const ParamVector& x,
                                       double imag_tol = 1e-8) {
  if (x.genus() != es.genus) throw LatticeError("parameter vector has wrong genus");
  int n = calc.grid.n;
  CVec f = CVec::Zero(n), b = CVec::Zero(n);
  CMat D = calc.D.cast<cplx>();
  for (int k = 0; k < es.genus; ++k) {
    double mu = es.mus[k];
    if (std::abs(mu) < 1e-12) throw LatticeError("eigenvalue too close to zero");
    cplx c = x.coefficient(k);
    const CVec& eta = es.etas[k];
    CVec eb = eta.conjugate();
    f += c * eta + std::conj(c) * eb;
    CVec de = D * eta, deb = D * eb;
    b += cplx(0, 1) * ((1 / mu - mu) * c * de + (mu - 1 / mu) * std::conj(c) * deb);
  }
  double fs = std::max(1.0, f.cwiseAbs().maxCoeff()), bs = std::max(1.0, b.cwiseAbs().maxCoeff());
  if (f.imag().cwiseAbs().maxCoeff() > imag_tol * fs || b.imag().cwiseAbs().maxCoeff() > imag_tol * bs)
    throw LatticeError("boundary datum is not real");
  BoundaryDatum d;
  d.params = x;
  d.f = f.real();
  d.b_nu = b.real();
  return d;
}

}  // namespace dnp
