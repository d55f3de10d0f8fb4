#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace dnp {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

struct BoundaryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline const double kPi = std::acos(-1.0);

struct BoundaryGrid {
  int n = 0;
  double total_length = 0;
  std::vector<double> arclengths;
  std::vector<double> weights;

  static BoundaryGrid uniform(int n, double length) {
    if (n < 3) throw BoundaryError("grid needs at least 3 samples");
    if (!(length > 0)) throw BoundaryError("total length must be positive");
    BoundaryGrid g;
    g.n = n;
    g.total_length = length;
    for (int j = 0; j < n; ++j) g.arclengths.push_back(length * j / n);
    g.weights.assign(n, length / n);
    return g;
  }

  bool is_uniform(double tol = 1e-9) const {
    double h = total_length / n;
    for (int j = 0; j < n; ++j)
      if (std::abs(arclengths[j] - h * j) > tol * total_length || std::abs(weights[j] - h) > tol * h) return false;
    return true;
  }
  double weight() const { return total_length / n; }
  // highest resolved Fourier mode; the Nyquist mode of an even grid is dropped
  int kmax() const { return (n - 1) / 2; }
};

struct DNMatrix {
  BoundaryGrid grid;
  Mat matrix;
};

template <class F>
Mat circulant(int n, F entry) {
  std::vector<double> c(n);
  for (int d = 0; d < n; ++d) c[d] = entry(d);
  Mat m(n, n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) m(j, l) = c[((j - l) % n + n) % n];
  return m;
}

// Trigonometric derivative and mean-zero antiderivative as dense real matrices.
inline Mat derivative_matrix(const BoundaryGrid& g) {
  if (!g.is_uniform()) throw BoundaryError("d_gamma needs a uniform grid");
  int n = g.n, K = g.kmax();
  double L = g.total_length;
  return circulant(n, [&](int d) {
    double th = 2 * kPi * d / n, s = 0;
    for (int k = 1; k <= K; ++k) s += k * std::sin(k * th);
    return -4 * kPi * s / (L * n);
  });
}

inline Mat antiderivative_matrix(const BoundaryGrid& g) {
  if (!g.is_uniform()) throw BoundaryError("d_gamma_inv needs a uniform grid");
  int n = g.n, K = g.kmax();
  double L = g.total_length;
  return circulant(n, [&](int d) {
    double th = 2 * kPi * d / n, s = 0;
    for (int k = 1; k <= K; ++k) s += std::sin(k * th) / k;
    return L * s / (kPi * n);
  });
}

template <class V>
auto mean(const BoundaryGrid& g, const V& f) {
  typename V::Scalar s(0);
  for (int j = 0; j < g.n; ++j) s += g.weights[j] * f[j];
  return s / g.total_length;
}

// (f, h)_Γ = ∫ f conj(h) dl
template <class A, class B>
cplx inner(const BoundaryGrid& g, const A& f, const B& h) {
  cplx s = 0;
  for (int j = 0; j < g.n; ++j) s += g.weights[j] * cplx(f[j]) * std::conj(cplx(h[j]));
  return s;
}

template <class A>
double l2norm(const BoundaryGrid& g, const A& f) {
  return std::sqrt(std::max(0.0, inner(g, f, f).real()));
}

// Differential operators on one grid, built once.
struct BoundaryCalculus {
  BoundaryGrid grid;
  Mat D, Dinv;
  double mean_tol = 1e-8;

  explicit BoundaryCalculus(const BoundaryGrid& g) : grid(g), D(derivative_matrix(g)), Dinv(antiderivative_matrix(g)) {}

  template <class V>
  V d_gamma(const V& f) const { return D * f; }

  template <class V>
  V d_gamma_inv(const V& f) const {
    auto m = mean(grid, f);
    double scale = l2norm(grid, f) / std::sqrt(grid.total_length);
    if (std::abs(m) > mean_tol * std::max(1.0, scale))
      throw BoundaryError("d_gamma_inv: input has nonzero mean " + std::to_string(std::abs(m)));
    return Dinv * f;
  }
};

inline void check_grid(const DNMatrix& dn) {
  if (dn.matrix.rows() != dn.grid.n || dn.matrix.cols() != dn.grid.n)
    throw BoundaryError("matrix size does not match grid size");
}

// (Λf, h)_Γ
template <class A, class B>
cplx lambda_inner(const DNMatrix& dn, const A& f, const B& h) {
  check_grid(dn);
  if (f.size() != dn.grid.n || h.size() != dn.grid.n) throw BoundaryError("grid mismatch in lambda_inner");
  CVec lf = dn.matrix.cast<cplx>() * f.template cast<cplx>();
  return inner(dn.grid, lf, h);
}

// Fourier multiplier |k|·2π/L, the DN map of a disk of circumference L.
inline DNMatrix disk_analytic_dn(int n, double length = 2 * kPi) {
  DNMatrix dn;
  dn.grid = BoundaryGrid::uniform(n, length);
  int K = dn.grid.kmax();
  double c = 2 * kPi / length;
  dn.matrix = circulant(n, [&](int d) {
    double th = 2 * kPi * d / n, s = 0;
    for (int k = 1; k <= K; ++k) s += 2.0 * k * std::cos(k * th);
    if (n % 2 == 0) s += (n / 2) * ((d % 2) ? -1.0 : 1.0);
    return c * s / n;
  });
  return dn;
}

inline double symmetry_residual(const DNMatrix& dn) {
  return (dn.matrix - dn.matrix.transpose()).cwiseAbs().maxCoeff() / std::max(1e-300, dn.matrix.cwiseAbs().maxCoeff());
}

// ---------------------------------------------------------------------------
// I/O

inline nlohmann::json dn_to_json(const DNMatrix& dn) {
  nlohmann::json j;
  j["n"] = dn.grid.n;
  j["total_length"] = dn.grid.total_length;
  j["arclengths"] = dn.grid.arclengths;
  j["weights"] = dn.grid.weights;
  std::vector<double> m(std::size_t(dn.grid.n) * dn.grid.n);
  for (int r = 0; r < dn.grid.n; ++r)
    for (int c = 0; c < dn.grid.n; ++c) m[std::size_t(r) * dn.grid.n + c] = dn.matrix(r, c);
  j["matrix"] = m;
  return j;
}

inline DNMatrix dn_from_json(const nlohmann::json& j) {
  auto need = [&](const char* k) -> const nlohmann::json& {
    if (!j.contains(k)) throw BoundaryError(std::string("DN file: missing field `") + k + "`");
    return j.at(k);
  };
  DNMatrix dn;
  try {
    dn.grid.n = need("n").get<int>();
    dn.grid.total_length = need("total_length").get<double>();
    dn.grid.arclengths = need("arclengths").get<std::vector<double>>();
    dn.grid.weights = need("weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw BoundaryError(std::string("DN file: bad header field: ") + e.what());
  }
  int n = dn.grid.n;
  if (n < 3) throw BoundaryError("DN file: field `n` must be at least 3");
  if (int(dn.grid.arclengths.size()) != n) throw BoundaryError("DN file: `arclengths` has wrong length");
  if (int(dn.grid.weights.size()) != n) throw BoundaryError("DN file: `weights` has wrong length");
  const auto& mj = need("matrix");
  std::vector<double> flat;
  try {
    if (mj.is_array() && !mj.empty() && mj[0].is_array()) {
      for (const auto& row : mj)
        for (const auto& x : row) flat.push_back(x.get<double>());
    } else {
      flat = mj.get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw BoundaryError(std::string("DN file: bad `matrix`: ") + e.what());
  }
  if (flat.size() != std::size_t(n) * n)
    throw BoundaryError("DN file: `matrix` has " + std::to_string(flat.size()) + " entries, expected n*n = " +
                        std::to_string(std::size_t(n) * n));
  dn.matrix.resize(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) dn.matrix(r, c) = flat[std::size_t(r) * n + c];
  double ws = 0;
  for (double w : dn.grid.weights) ws += w;
  if (std::abs(ws - dn.grid.total_length) > 1e-9 * dn.grid.total_length)
    throw BoundaryError("DN file: weights do not sum to total_length");
  return dn;
}

inline void save_dn(const std::string& path, const DNMatrix& dn) {
  std::ofstream os(path);
  if (!os) throw BoundaryError("cannot write " + path);
  os << dn_to_json(dn).dump() << '\n';
}

inline DNMatrix load_dn(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw BoundaryError("cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw BoundaryError("DN file " + path + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return dn_from_json(j);
}

}  // namespace dnp
