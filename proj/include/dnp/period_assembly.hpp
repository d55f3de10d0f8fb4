#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <random>
#include <string>
#include <vector>

#include "canonical_form.hpp"

namespace dnp {

struct PeriodError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SiegelReport {
  double symmetry_residual = 0;   // max |𝔹 − 𝔹ᵀ|
  double min_imag_eigenvalue = 0;
  double relation_residual = 0;   // conjugation relations between blocks
  bool pass = false;
};

struct PeriodMatrices {
  int genus = 0;
  Mat aux;    // 𝔅
  CMat bmat;  // 𝔹
  SiegelReport siegel;
};

struct ChiMatrices {
  // upper[s][t] = χ^{s,t}, lower[s][t] = χ_{s,t}; index 0 is +, 1 is −
  IMat upper[2][2], lower[2][2];
};

inline ChiMatrices chi_matrices(int g) {
  ChiMatrices c;
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 2; ++t) {
      int ss = s ? -1 : 1, tt = t ? -1 : 1;
      IMat up = IMat::Zero(2 * g, 2 * g), lo = IMat::Zero(2 * g, 2 * g);
      up.topLeftCorner(g, g) = ss * IMat::Identity(g, g);
      up.topRightCorner(g, g) = tt * IMat::Identity(g, g);
      lo.bottomLeftCorner(g, g) = ss * IMat::Identity(g, g);
      lo.bottomRightCorner(g, g) = tt * IMat::Identity(g, g);
      c.upper[s][t] = up;
      c.lower[s][t] = lo;
    }
  return c;
}

inline Mat gram_matrix(const HilbertOps& ops, const std::vector<BoundaryDatum>& data) {
  int m = int(data.size());
  Mat G(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) G(i, j) = G(j, i) = gram(ops, data[i], data[j]);
  return G;
}

// 𝔅 = Ω⁻¹G for canonical data.
inline Mat aux_period_matrix(const HilbertOps& ops, const std::vector<BoundaryDatum>& data) {
  int m = int(data.size());
  if (m % 2) throw PeriodError("need an even number of boundary data");
  Mat G = gram_matrix(ops, data);
  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  if (m > 0 && es.eigenvalues().minCoeff() <= 0) throw PeriodError("Gram matrix is not positive definite");
  Mat Om = standard_symplectic(m / 2).cast<double>();
  return Om.transpose() * G;  // Ω⁻¹ = Ωᵀ
}

inline double relation_residual(const CMat& Bm) {
  int g = int(Bm.rows()) / 2;
  double r = 0;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      r = std::max(r, std::abs(Bm(g + i, g + j) + std::conj(Bm(i, j))));
      r = std::max(r, std::abs(Bm(g + i, j) + std::conj(Bm(i, g + j))));
    }
  return r;
}

inline SiegelReport check_siegel(const CMat& Bm, double tol = 1e-6) {
  SiegelReport r;
  if (Bm.rows() == 0) {
    r.pass = true;
    return r;
  }
  r.symmetry_residual = (Bm - Bm.transpose()).cwiseAbs().maxCoeff();
  Mat Im = Bm.imag();
  Im = 0.5 * (Im + Im.transpose()).eval();
  r.min_imag_eigenvalue = Eigen::SelfAdjointEigenSolver<Mat>(Im).eigenvalues().minCoeff();
  r.relation_residual = relation_residual(Bm);
  r.pass = r.symmetry_residual <= tol && r.min_imag_eigenvalue > 0;
  return r;
}

// 𝔹 = (iχ^{+−} − 𝔅ᵀχ^{++})⁻¹(iχ_{++} − 𝔅ᵀχ_{+−})
inline CMat b_period_matrix(const Mat& aux) {
  int m = int(aux.rows());
  if (aux.cols() != m || m % 2) throw PeriodError("aux period matrix must be square of even size");
  if (m == 0) return CMat(0, 0);
  auto chi = chi_matrices(m / 2);
  const cplx I(0, 1);
  CMat At = aux.transpose().cast<cplx>();
  CMat left = I * chi.upper[0][1].cast<cplx>() - At * chi.upper[0][0].cast<cplx>();
  CMat right = I * chi.lower[0][0].cast<cplx>() - At * chi.lower[0][1].cast<cplx>();
  Eigen::FullPivLU<CMat> lu(left);
  if (!lu.isInvertible() || lu.rcond() < 1e-12) throw PeriodError("left factor is singular: aux period matrix corrupted");
  return lu.solve(right);
}

inline PeriodMatrices assemble_periods(const Mat& aux, double tol = 1e-6) {
  PeriodMatrices p;
  p.genus = int(aux.rows()) / 2;
  p.aux = aux;
  p.bmat = b_period_matrix(aux);
  p.siegel = check_siegel(p.bmat, tol);
  return p;
}

inline bool is_symplectic(const IMat& M) {
  if (M.rows() != M.cols() || M.rows() % 2) return false;
  IMat O = standard_symplectic(int(M.rows()) / 2);
  return M * O * M.transpose() == O;
}

// 𝔅′ = M⁻¹𝔅M
inline Mat sp_transform(const Mat& aux, const IMat& M) {
  if (M.rows() != aux.rows() || !is_symplectic(M)) throw PeriodError("transformation is not in Sp(2g, Z)");
  // M⁻¹ = −ΩMᵀΩ for symplectic M
  IMat O = standard_symplectic(int(M.rows()) / 2);
  Mat Minv = (-(O * M.transpose() * O)).cast<double>();
  return Minv * aux * M.cast<double>();
}

// Random Sp(2g, Z) element from products of elementary transvections.
template <class Rng>
IMat random_symplectic(int g, Rng& rng, int factors = 6) {
  IMat M = IMat::Identity(2 * g, 2 * g);
  std::uniform_int_distribution<int> pick(0, 2), idx(0, g - 1), val(-2, 2);
  for (int f = 0; f < factors; ++f) {
    IMat E = IMat::Identity(2 * g, 2 * g);
    int i = idx(rng), j = idx(rng), kind = pick(rng), v = val(rng);
    if (kind == 0) {  // [[I, S],[0, I]] with S symmetric
      E(i, g + j) += v;
      if (i != j) E(j, g + i) += v;
    } else if (kind == 1) {  // [[I, 0],[S, I]]
      E(g + i, j) += v;
      if (i != j) E(g + j, i) += v;
    } else {  // [[U, 0],[0, U⁻ᵀ]] with U = I + v e_ij
      if (i != j) {
        E(i, j) += v;
        E(g + j, g + i) -= v;
      }
    }
    M = E * M;
  }
  return M;
}

}  // namespace dnp
