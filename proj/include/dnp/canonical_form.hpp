#pragma once

#include <Eigen/Dense>

#include <cstdlib>
#include <vector>

#include "hilbert_spectrum.hpp"
#include "lattice_solver.hpp"
#include "mesh_geometry.hpp"

namespace dnp {

struct CanonicalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using IMat = Eigen::MatrixXi;

inline IMat standard_symplectic(int g) {
  IMat O = IMat::Zero(2 * g, 2 * g);
  O.topRightCorner(g, g) = IMat::Identity(g, g);
  O.bottomLeftCorner(g, g) = -IMat::Identity(g, g);
  return O;
}

// ⟨κ, κ′⟩ = (B_ν, Hf′)_Γ = −(Hf, B′_ν)_Γ
inline double pairing(const HilbertOps& ops, const BoundaryDatum& k1, const BoundaryDatum& k2,
                      double consistency_tol = 1e-6) {
  const auto& g = ops.grid();
  if (k1.f.size() != g.n || k2.f.size() != g.n) throw CanonicalError("boundary data on different grids");
  Vec hf2 = ops.H * k2.f, hf1 = ops.H * k1.f;
  double a = inner(g, k1.b_nu, hf2).real();
  double b = -inner(g, hf1, k2.b_nu).real();
  double scale = std::max(1.0, std::max(std::abs(a), std::abs(b)));
  if (std::abs(a - b) > consistency_tol * scale)
    throw CanonicalError("pairing formulas disagree: " + std::to_string(a) + " vs " + std::to_string(b));
  return 0.5 * (a + b);
}

// (κ, κ′) = −(B_ν, f′)_Γ = −(f, B′_ν)_Γ
inline double gram(const HilbertOps& ops, const BoundaryDatum& k1, const BoundaryDatum& k2,
                   double consistency_tol = 1e-6) {
  const auto& g = ops.grid();
  if (k1.f.size() != g.n || k2.f.size() != g.n) throw CanonicalError("boundary data on different grids");
  double a = -inner(g, k1.b_nu, k2.f).real();
  double b = -inner(g, k1.f, k2.b_nu).real();
  double scale = std::max(1.0, std::max(std::abs(a), std::abs(b)));
  if (std::abs(a - b) > consistency_tol * scale)
    throw CanonicalError("Gram formulas disagree: " + std::to_string(a) + " vs " + std::to_string(b));
  return 0.5 * (a + b);
}

struct PairingMatrix {
  Mat real_matrix;
  IMat integer_matrix;
  double max_rounding_error = 0;
};

inline PairingMatrix pairing_matrix(const HilbertOps& ops, const std::vector<BoundaryDatum>& data,
                                    double tol = 0.05) {
  int m = int(data.size());
  PairingMatrix p;
  p.real_matrix = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      p.real_matrix(i, j) = pairing(ops, data[i], data[j]);
      p.real_matrix(j, i) = pairing(ops, data[j], data[i]);
    }
  p.integer_matrix = p.real_matrix.array().round().cast<int>().matrix();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      p.max_rounding_error = std::max(p.max_rounding_error, std::abs(p.real_matrix(i, j) - p.integer_matrix(i, j)));
  if (p.integer_matrix != IMat(-p.integer_matrix.transpose()))
    throw CanonicalError("rounded pairing matrix is not alternating");
  if (p.max_rounding_error > tol)
    throw CanonicalError("pairing values are not near integers: max rounding error " +
                         std::to_string(p.max_rounding_error));
  return p;
}

// Integer symplectic Gram–Schmidt: M·A·Mᵀ = Ω exactly.
inline IMat symplectic_reduce(const IMat& A) {
  int m = int(A.rows());
  if (A.cols() != m || m % 2) throw CanonicalError("pairing matrix must be square of even size");
  if (A != IMat(-A.transpose())) throw CanonicalError("pairing matrix is not alternating");
  long long det = det_integer(A);
  if (std::llabs(det) != 1)
    throw CanonicalError("pairing matrix is not unimodular (det " + std::to_string(det) +
                         "): lattice generators are missing");
  int g = m / 2;
  using IVec = Eigen::Matrix<long long, Eigen::Dynamic, 1>;
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> Al = A.cast<long long>();
  auto form = [&](const IVec& u, const IVec& w) { return (u.transpose() * Al * w)(0, 0); };
  std::vector<IVec> rest;
  for (int i = 0; i < m; ++i) rest.push_back(IVec::Unit(m, i));
  std::vector<IVec> as, bs;
  for (int k = 0; k < g; ++k) {
    IVec e = rest.front();
    rest.erase(rest.begin());
    while (true) {
      int best = -1;
      for (int j = 0; j < int(rest.size()); ++j) {
        long long v = form(e, rest[j]);
        if (v != 0 && (best < 0 || std::llabs(v) < std::llabs(form(e, rest[best])))) best = j;
      }
      if (best < 0) throw CanonicalError("degenerate pairing during reduction");
      long long p = form(e, rest[best]);
      if (std::llabs(p) == 1) {
        IVec f = rest[best];
        rest.erase(rest.begin() + best);
        IVec a = e, b = f;
        if (p == -1) std::swap(a, b);
        for (auto& v : rest) {
          long long vb = form(v, b), va = form(v, a);
          v = v - vb * a + va * b;
        }
        as.push_back(a);
        bs.push_back(b);
        break;
      }
      bool reduced = false;
      for (int j = 0; j < int(rest.size()); ++j) {
        if (j == best) continue;
        long long q = form(e, rest[j]) / p;
        if (q != 0) {
          rest[j] -= q * rest[best];
          reduced = true;
        }
      }
      if (!reduced) throw CanonicalError("pairing has no unimodular partner");
    }
  }
  IMat M(m, m);
  for (int k = 0; k < g; ++k) {
    M.row(k) = as[k].transpose().cast<int>();
    M.row(g + k) = bs[k].transpose().cast<int>();
  }
  if (M * A * M.transpose() != standard_symplectic(g)) throw CanonicalError("symplectic reduction failed");
  return M;
}

inline BoundaryDatum combine(const std::vector<BoundaryDatum>& data, const Eigen::RowVectorXi& coeffs) {
  BoundaryDatum d;
  int g = data.front().params.genus();
  int n = int(data.front().f.size());
  Vec x = Vec::Zero(2 * g);
  d.f = Vec::Zero(n);
  d.b_nu = Vec::Zero(n);
  for (int j = 0; j < int(data.size()); ++j) {
    if (!coeffs[j]) continue;
    x += coeffs[j] * data[j].params.flat();
    d.f += coeffs[j] * data[j].f;
    d.b_nu += coeffs[j] * data[j].b_nu;
  }
  d.params = ParamVector::from_flat(x);
  return d;
}

// κ̃_i = Σ_j M_ij κ_j, checked to pair as Ω.
inline std::vector<BoundaryDatum> canonical_data(const HilbertOps& ops, const std::vector<BoundaryDatum>& data,
                                                 const IMat& M, double tol = 0.05) {
  std::vector<BoundaryDatum> out;
  for (int i = 0; i < M.rows(); ++i) out.push_back(combine(data, M.row(i)));
  auto p = pairing_matrix(ops, out, tol);
  if (p.integer_matrix != standard_symplectic(int(M.rows()) / 2))
    throw CanonicalError("canonical data do not pair as the standard symplectic matrix");
  return out;
}

}  // namespace dnp
