#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <string>

#include "boundary_calculus.hpp"
#include "fem_oracle.hpp"

namespace dnp {

struct SpectrumError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// H = Λ⁺∂_γ and H⁻¹ = ∂_γ⁻¹Λ as dense grid operators.
struct HilbertOps {
  DNMatrix dn;
  BoundaryCalculus calc;
  Mat Lplus, H, Hinv;

  explicit HilbertOps(const DNMatrix& d) : dn(d), calc(d.grid) {
    check_grid(dn);
    Lplus = lambda_pinv(dn);
    H = Lplus * calc.D;
    Hinv = calc.Dinv * dn.matrix;
  }
  const BoundaryGrid& grid() const { return dn.grid; }
  int n() const { return dn.grid.n; }

  template <class V>
  V apply(const V& f) const { return H * f; }
  template <class V>
  V inv_apply(const V& f) const { return Hinv * f; }
};

enum class EigClass { zero, plus_i, minus_i, exceptional };

inline const char* to_string(EigClass c) {
  switch (c) {
    case EigClass::zero: return "zero";
    case EigClass::plus_i: return "plus_i";
    case EigClass::minus_i: return "minus_i";
    default: return "exceptional";
  }
}

// Eigenvalues λ = iμ of the pencil ∂_γ f = λΛf on mean-zero trigonometric
// polynomials (modes 1..K and their negatives).
struct Spectrum {
  Vec mus;      // ascending
  CMat Q;       // orthonormal Fourier basis, n × 2K
  CMat V;       // coefficients, VᴴBV = I
  CMat B;       // QᴴΛQ
  CMat vectors() const { return Q * V; }
  std::vector<cplx> lambdas(bool with_constant = true) const {
    std::vector<cplx> l;
    if (with_constant) l.emplace_back(0.0, 0.0);
    for (int i = 0; i < mus.size(); ++i) l.emplace_back(0.0, mus[i]);
    return l;
  }
};

inline CMat fourier_basis(const BoundaryGrid& g) {
  int n = g.n, K = g.kmax();
  CMat Q(n, 2 * K);
  for (int k = 1; k <= K; ++k)
    for (int j = 0; j < n; ++j) {
      double th = 2 * kPi * k * j / n;
      Q(j, k - 1) = std::polar(1.0 / std::sqrt(double(n)), th);
      Q(j, K + k - 1) = std::polar(1.0 / std::sqrt(double(n)), -th);
    }
  return Q;
}

inline Spectrum spectrum(const HilbertOps& ops) {
  Spectrum s;
  s.Q = fourier_basis(ops.grid());
  CMat Dc = ops.calc.D.cast<cplx>();
  CMat A = s.Q.adjoint() * (cplx(0, -1) * Dc) * s.Q;
  A = 0.5 * (A + A.adjoint()).eval();
  s.B = s.Q.adjoint() * ops.dn.matrix.cast<cplx>() * s.Q;
  s.B = 0.5 * (s.B + s.B.adjoint()).eval();
  Eigen::LLT<CMat> llt(s.B);
  if (llt.info() != Eigen::Success) throw SpectrumError("pencil degenerate: Lambda is not positive on mean-zero functions");
  Eigen::GeneralizedSelfAdjointEigenSolver<CMat> ges(A, s.B, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (ges.info() != Eigen::Success) throw SpectrumError("generalized eigensolver failed");
  s.mus = ges.eigenvalues();
  s.V = ges.eigenvectors();
  return s;
}

inline EigClass classify(cplx lambda, double delta) {
  if (std::abs(lambda) <= 1e-12) return EigClass::zero;
  if (std::abs(lambda - cplx(0, 1)) <= delta) return EigClass::plus_i;
  if (std::abs(lambda + cplx(0, 1)) <= delta) return EigClass::minus_i;
  return EigClass::exceptional;
}

struct GenusReport {
  int genus = 0;
  bool ambiguous = false;  // some eigenvalue has δ/2 <= |λ − i| <= δ
  double margin = 0;       // distance from δ of the closest eigenvalue in ℂ₊
};

inline GenusReport detect_genus(const Spectrum& s, double delta) {
  if (!(delta > 0)) throw SpectrumError("delta must be positive");
  GenusReport r;
  r.margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < s.mus.size(); ++i) {
    double mu = s.mus[i];
    if (mu <= 0) continue;
    double d = std::abs(mu - 1.0);
    if (d > delta) ++r.genus;
    if (d >= 0.5 * delta && d <= delta) r.ambiguous = true;
    r.margin = std::min(r.margin, std::abs(d - delta));
  }
  return r;
}

struct EigenSystem {
  int genus = 0;
  std::vector<double> mus;
  std::vector<CVec> etas;  // L2(Γ)-normalized grid samples
  std::vector<double> residuals;  // ‖∂η − iμΛη‖ / ‖Λη‖
  double pairing_defect = 0;      // max_k min_j |μ_j + μ_k|
};

// Fix the free phase: the largest Fourier coefficient becomes real positive.
inline void normalize_phase(CVec& v, const CMat& Q) {
  CVec c = Q.adjoint() * v;
  Eigen::Index k;
  c.cwiseAbs().maxCoeff(&k);
  if (std::abs(c[k]) > 0) v *= std::conj(c[k]) / std::abs(c[k]);
}

inline EigenSystem exceptional_pairs(const HilbertOps& ops, const Spectrum& s, double delta,
                                     double cluster_tol = 1e-6) {
  EigenSystem es;
  const auto& g = ops.grid();
  CMat X = s.vectors();
  std::vector<int> idx;
  for (int i = 0; i < s.mus.size(); ++i)
    if (s.mus[i] > 0 && std::abs(s.mus[i] - 1.0) > delta) idx.push_back(i);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return s.mus[a] < s.mus[b]; });
  // clusters of nearly equal μ are re-orthonormalized in L2(Γ)
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i + 1;
    while (j < idx.size() && s.mus[idx[j]] - s.mus[idx[j - 1]] < cluster_tol) ++j;
    std::vector<CVec> block;
    for (std::size_t k = i; k < j; ++k) block.push_back(X.col(idx[k]));
    for (std::size_t a = 0; a < block.size(); ++a) {
      for (std::size_t b = 0; b < a; ++b) block[a] -= inner(g, block[a], block[b]) * block[b];
      double nrm = l2norm(g, block[a]);
      if (nrm < 1e-8) throw SpectrumError("eigenvalue cluster lost rank during orthogonalization");
      block[a] /= nrm;
      normalize_phase(block[a], s.Q);
      block[a] /= l2norm(g, block[a]);
    }
    for (std::size_t k = i; k < j; ++k) {
      es.mus.push_back(s.mus[idx[k]]);
      es.etas.push_back(block[k - i]);
    }
    i = j;
  }
  es.genus = int(es.mus.size());
  CMat L = ops.dn.matrix.cast<cplx>();
  CMat D = ops.calc.D.cast<cplx>();
  for (int k = 0; k < es.genus; ++k) {
    CVec le = L * es.etas[k];
    CVec r = D * es.etas[k] - cplx(0, es.mus[k]) * le;
    es.residuals.push_back(l2norm(g, r) / std::max(l2norm(g, le), 1e-300));
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < s.mus.size(); ++j) best = std::min(best, std::abs(s.mus[j] + es.mus[k]));
    es.pairing_defect = std::max(es.pairing_defect, best);
  }
  return es;
}

// Hilbert transform rebuilt from the pencil with every eigenvalue within δ
// of ±i set to exactly ±i; the exceptional part is kept.
inline Mat snapped_hilbert(const Spectrum& s, double delta) {
  int m = int(s.mus.size());
  CVec lam(m);
  for (int i = 0; i < m; ++i) {
    double mu = s.mus[i];
    if (std::abs(mu - 1.0) <= delta) mu = 1.0;
    else if (std::abs(mu + 1.0) <= delta) mu = -1.0;
    lam[i] = cplx(0, mu);
  }
  CMat Ht = s.Q * s.V * lam.asDiagonal() * s.V.adjoint() * s.B * s.Q.adjoint();
  return Ht.real();
}

}  // namespace dnp
