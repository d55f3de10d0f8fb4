#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <memory>

#include "boundary_calculus.hpp"
#include "mesh_geometry.hpp"

namespace dnp {

using SpMat = Eigen::SparseMatrix<double>;

struct FemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using PwField = std::vector<Eigen::Vector2d>;

// Pseudo-inverse of a DN matrix on mean-zero functions: the constant is
// deflated by a rank-one shift and projected out on both sides.
inline Mat lambda_pinv(const DNMatrix& dn) {
  int n = dn.grid.n;
  Mat P = Mat::Identity(n, n) - Mat::Constant(n, n, 1.0 / n);
  double s = std::max(1e-12, dn.matrix.trace() / n);
  Mat shifted = dn.matrix + Mat::Constant(n, n, s / n);
  Eigen::PartialPivLU<Mat> lu(shifted);
  Mat inv = lu.inverse();
  if (!inv.allFinite()) throw FemError("Lambda is singular on the mean-zero subspace");
  return P * inv * P;
}

// Periodic trigonometric interpolation from a uniform grid of n samples on
// [0, L) to arbitrary arclength positions.
inline Mat trig_interpolation(const std::vector<double>& s, int n, double L) {
  Mat E(s.size(), n);
  for (std::size_t i = 0; i < s.size(); ++i)
    for (int j = 0; j < n; ++j) {
      double x = s[i] - L * j / n;
      double a = kPi * x / L;
      double den = (n % 2) ? n * std::sin(a) : n * std::tan(a);
      E(i, j) = std::abs(std::sin(a)) < 1e-14 ? 1.0 : std::sin(n * a) / den;
    }
  return E;
}

inline Eigen::VectorXd cotan_weights(const TriMesh& m) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m.edges.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& e = m.tri_edges[t];
    double l[3] = {m.edge_lengths[e[0]], m.edge_lengths[e[1]], m.edge_lengths[e[2]]};
    double A = triangle_area(l[0], l[1], l[2]);
    double scale = l[0] * l[0] + l[1] * l[1] + l[2] * l[2];
    if (!(A > 1e-14 * scale)) throw FemError("degenerate triangle " + std::to_string(t));
    for (int c = 0; c < 3; ++c) {
      double cot = (l[(c + 1) % 3] * l[(c + 1) % 3] + l[(c + 2) % 3] * l[(c + 2) % 3] - l[c] * l[c]) / (4 * A);
      w[e[c]] += 0.5 * cot;
    }
  }
  return w;
}

inline SpMat assemble_laplacian(const TriMesh& m) {
  Eigen::VectorXd w = cotan_weights(m);
  std::vector<Eigen::Triplet<double>> tr;
  tr.reserve(m.edges.size() * 4);
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    auto [a, b] = m.edges[e];
    tr.emplace_back(a, b, -w[e]);
    tr.emplace_back(b, a, -w[e]);
    tr.emplace_back(a, a, w[e]);
    tr.emplace_back(b, b, w[e]);
  }
  SpMat K(m.vertex_count, m.vertex_count);
  K.setFromTriplets(tr.begin(), tr.end());
  return K;
}

struct FieldFromTrace {
  Vec f, h;      // grid samples
  Vec u_f, u_h;  // harmonic extensions
  PwField A, B;
};

struct JumpFields {
  std::vector<Eigen::VectorXd> cochains;  // closed edge 1-forms dφ + ω_c
  std::vector<PwField> fields;
  double divergence_residual = 0;  // interior vertices, relative
  double boundary_flux_residual = 0;  // boundary vertices, relative
};

// Interior finite-element computations on one mesh; factorizations are
// built once and reused.
class FemOracle {
 public:
  explicit FemOracle(TriMesh mesh) : m_(std::move(mesh)) {
    w_ = cotan_weights(m_);
    K_ = assemble_laplacian(m_);
    int nv = m_.vertex_count;
    frames_.resize(m_.triangles.size());
    area_.resize(m_.triangles.size());
    for (std::size_t t = 0; t < m_.triangles.size(); ++t) {
      frames_[t] = triangle_frame(m_, int(t));
      area_[t] = triangle_area(m_, int(t));
    }
    edge_tris_.assign(m_.edges.size(), {-1, -1});
    for (std::size_t t = 0; t < m_.triangles.size(); ++t)
      for (int c = 0; c < 3; ++c) {
        auto& et = edge_tris_[m_.tri_edges[t][c]];
        (et[0] < 0 ? et[0] : et[1]) = int(t);
      }
    local_.assign(nv, -1);
    is_boundary_.assign(nv, 0);
    for (int v : m_.boundary_loop) is_boundary_[v] = 1;
    for (int v = 0; v < nv; ++v)
      if (!is_boundary_[v]) {
        local_[v] = int(interior_.size());
        interior_.push_back(v);
      }
    for (std::size_t i = 0; i < m_.boundary_loop.size(); ++i) local_[m_.boundary_loop[i]] = int(i);
    split_stiffness();
    bnd_s_.push_back(0.0);
    int nb = int(m_.boundary_loop.size());
    for (int i = 0; i < nb; ++i) {
      double l = m_.length(m_.boundary_loop[i], m_.boundary_loop[(i + 1) % nb]);
      bnd_s_.push_back(bnd_s_.back() + l);
    }
    bnd_L_ = bnd_s_.back();
    bnd_s_.pop_back();
  }

  const TriMesh& mesh() const { return m_; }
  const SpMat& laplacian() const { return K_; }
  const Eigen::VectorXd& edge_weights() const { return w_; }
  double boundary_length() const { return bnd_L_; }
  const std::vector<double>& boundary_arclengths() const { return bnd_s_; }
  double area(int t) const { return area_[t]; }

  // Discrete harmonic function with the given values on boundary_loop.
  Vec harmonic_extension(const Vec& fb) const {
    if (fb.size() != Eigen::Index(m_.boundary_loop.size())) throw FemError("boundary data has wrong length");
    Vec rhs = -(Kib_ * fb);
    Vec ui = solver_.solve(rhs);
    if (solver_.info() != Eigen::Success) throw FemError("interior solve failed");
    Vec u(m_.vertex_count);
    for (std::size_t i = 0; i < interior_.size(); ++i) u[interior_[i]] = ui[i];
    for (std::size_t i = 0; i < m_.boundary_loop.size(); ++i) u[m_.boundary_loop[i]] = fb[i];
    return u;
  }

  // Laplacian residual at interior vertices relative to the boundary data scale.
  double interior_residual(const Vec& u) const {
    Vec r = K_ * u;
    double num = 0, den = 0;
    for (int v : interior_) num = std::max(num, std::abs(r[v]));
    for (int v = 0; v < m_.vertex_count; ++v) den = std::max(den, std::abs(K_.coeff(v, v) * u[v]));
    return num / std::max(den, 1e-300);
  }

  // Interpolation from a uniform grid of n samples to the boundary vertices.
  Mat interpolation(int n) const { return trig_interpolation(bnd_s_, n, bnd_L_); }

  // Galerkin DN matrix on a uniform grid: (Λf, h)_Γ equals the Dirichlet
  // energy pairing of the harmonic extensions of the interpolants.
  DNMatrix dn_map(int n, int block = 32) const {
    DNMatrix dn;
    dn.grid = BoundaryGrid::uniform(n, bnd_L_);
    Mat E = interpolation(n);
    Mat SE(E.rows(), n);
    for (int c0 = 0; c0 < n; c0 += block) {
      int nc = std::min(block, n - c0);
      Mat rhs = Kib_ * E.middleCols(c0, nc);
      Mat x = solver_.solve(rhs);
      if (solver_.info() != Eigen::Success) throw FemError("singular interior block");
      SE.middleCols(c0, nc) = Kbb_ * E.middleCols(c0, nc) - Kbi_ * x;
    }
    Mat lam = E.transpose() * SE / dn.grid.weight();
    lam = 0.5 * (lam + lam.transpose());
    Mat P = Mat::Identity(n, n) - Mat::Constant(n, n, 1.0 / n);
    dn.matrix = P * lam * P;
    dn.matrix = 0.5 * (dn.matrix + dn.matrix.transpose());
    return dn;
  }

  Vec extend_grid(const Mat& E, const Vec& f) const { return harmonic_extension(E * f); }

  PwField gradient(const Vec& u) const {
    PwField g(m_.triangles.size());
    for (std::size_t t = 0; t < m_.triangles.size(); ++t) {
      const auto& tr = m_.triangles[t];
      g[t] = solve_frame(int(t), u[tr[1]] - u[tr[0]], u[tr[2]] - u[tr[0]]);
    }
    return g;
  }

  // Per-triangle field of a closed edge 1-cochain (a<b orientation).
  PwField field_from_cochain(const Eigen::VectorXd& w) const {
    PwField g(m_.triangles.size());
    for (std::size_t t = 0; t < m_.triangles.size(); ++t) {
      const auto& tr = m_.triangles[t];
      g[t] = solve_frame(int(t), along(w, tr[0], tr[1]), along(w, tr[0], tr[2]));
    }
    return g;
  }

  static PwField rotate(const PwField& x) {
    PwField r(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) r[t] = Eigen::Vector2d(-x[t].y(), x[t].x());
    return r;
  }

  double interior_inner(const PwField& x, const PwField& y) const {
    double s = 0;
    for (std::size_t t = 0; t < x.size(); ++t) s += area_[t] * x[t].dot(y[t]);
    return s;
  }

  // Line integral along an edge cycle; each edge uses the mean of the
  // tangential components from its two triangles.
  double period(const PwField& x, const Cycle& c) const {
    double s = 0;
    int n = int(c.vertices.size());
    for (int i = 0; i < n; ++i) {
      int a = c.vertices[i], b = c.vertices[(i + 1) % n];
      int e = m_.edge_id(a, b);
      double acc = 0;
      int cnt = 0;
      for (int t : edge_tris_[e]) {
        if (t < 0) continue;
        acc += x[t].dot(corner(t, b) - corner(t, a));
        ++cnt;
      }
      s += acc / cnt;
    }
    return s;
  }

  // Conservative flux of ∇u to the left of an edge cycle: the cotan-weighted
  // differences over the edges crossed by the cycle pushed to its left.
  double flux_left(const Vec& u, const Cycle& c, const Corners& cn) const {
    double s = 0;
    visit_left(c, cn, [&](int v, int x, int e) { s += w_[e] * (u[x] - u[v]); });
    return s;
  }

  double flux_left_cochain(const Eigen::VectorXd& X, const Cycle& c, const Corners& cn) const {
    double s = 0;
    visit_left(c, cn, [&](int v, int x, int e) { s += w_[e] * along(X, v, x); });
    return s;
  }

  // Closed tangent fields with unit jumps: X_i = dφ + ω_i minimises the
  // cotan energy, so X_i is weakly divergence free with zero normal flux.
  JumpFields tangent_harmonic_basis(const CycleBasis& cb) const {
    JumpFields out;
    if (cb.cycles.empty()) return out;
    ensure_pinned();
    Corners cn(m_);
    double worst_int = 0, worst_bnd = 0;
    for (const auto& c : cb.cycles) {
      Eigen::VectorXd om = left_cochain(m_, cn, c);
      Vec div = weak_divergence(om);
      Vec rhs(m_.vertex_count - 1);
      for (int v = 1; v < m_.vertex_count; ++v) rhs[v - 1] = div[v];
      Vec phi_r = pinned_.solve(rhs);
      if (pinned_.info() != Eigen::Success) throw FemError("jump problem solve failed");
      Vec phi = Vec::Zero(m_.vertex_count);
      phi.tail(m_.vertex_count - 1) = phi_r;
      Eigen::VectorXd X = om;
      for (std::size_t e = 0; e < m_.edges.size(); ++e) X[e] += phi[m_.edges[e][1]] - phi[m_.edges[e][0]];
      Vec r = weak_divergence(X);
      Vec scale = weak_abs(X);
      double smax = std::max(scale.maxCoeff(), 1e-300);
      for (int v = 0; v < m_.vertex_count; ++v) {
        double rel = std::abs(r[v]) / smax;
        if (is_boundary_[v]) worst_bnd = std::max(worst_bnd, rel);
        else worst_int = std::max(worst_int, rel);
      }
      out.cochains.push_back(X);
      out.fields.push_back(field_from_cochain(X));
    }
    out.divergence_residual = worst_int;
    out.boundary_flux_residual = worst_bnd;
    int k = int(out.fields.size());
    Mat G(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) G(i, j) = interior_inner(out.fields[i], out.fields[j]);
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    if (es.eigenvalues().minCoeff() <= 1e-12 * es.eigenvalues().maxCoeff())
      throw FemError("tangent harmonic fields are linearly dependent");
    return out;
  }

  // A = Φ∇u^f − ∇u^h with Λh = −∂_γ f, and B = ΦA.
  FieldFromTrace field_from_trace(const DNMatrix& dn, const Mat& lambda_plus, const Mat& D, const Mat& E,
                                  const Vec& f) const {
    FieldFromTrace r;
    r.f = f;
    r.h = -(lambda_plus * (D * f));
    r.u_f = extend_grid(E, f);
    r.u_h = extend_grid(E, r.h);
    PwField gf = gradient(r.u_f), gh = gradient(r.u_h);
    PwField rf = rotate(gf);
    r.A.resize(gf.size());
    for (std::size_t t = 0; t < gf.size(); ++t) r.A[t] = rf[t] - gh[t];
    r.B = rotate(r.A);
    (void)dn;
    return r;
  }

  // Mean normal component of a field over boundary triangles, relative to its RMS.
  double boundary_normal_ratio(const PwField& x) const {
    double num = 0, len = 0;
    int nb = int(m_.boundary_loop.size());
    for (int i = 0; i < nb; ++i) {
      int a = m_.boundary_loop[i], b = m_.boundary_loop[(i + 1) % nb];
      int e = m_.edge_id(a, b);
      int t = edge_tris_[e][0];
      Eigen::Vector2d d = corner(t, b) - corner(t, a);
      Eigen::Vector2d nrm(d.y(), -d.x());  // outward: surface is on the left
      num += std::abs(x[t].dot(nrm));
      len += d.norm();
    }
    double tot = 0, ar = 0;
    for (std::size_t t = 0; t < x.size(); ++t) {
      tot += area_[t] * x[t].squaredNorm();
      ar += area_[t];
    }
    return (num / len) / std::sqrt(std::max(tot / ar, 1e-300));
  }

  Vec weak_divergence(const Eigen::VectorXd& X) const {
    Vec d = Vec::Zero(m_.vertex_count);
    for (std::size_t e = 0; e < m_.edges.size(); ++e) {
      auto [a, b] = m_.edges[e];
      d[a] += w_[e] * X[e];
      d[b] -= w_[e] * X[e];
    }
    return d;
  }

  double along(const Eigen::VectorXd& w, int a, int b) const {
    int e = m_.edge_id(a, b);
    return (a == m_.edges[e][0]) ? w[e] : -w[e];
  }

 private:
  TriMesh m_;
  Eigen::VectorXd w_;
  SpMat K_, Kii_, Kib_, Kbi_, Kbb_;
  std::vector<std::array<Eigen::Vector2d, 3>> frames_;
  std::vector<double> area_;
  std::vector<std::array<int, 2>> edge_tris_;
  std::vector<int> local_, interior_;
  std::vector<char> is_boundary_;
  std::vector<double> bnd_s_;
  double bnd_L_ = 0;
  Eigen::SimplicialLDLT<SpMat> solver_;
  mutable Eigen::SimplicialLDLT<SpMat> pinned_;
  mutable bool pinned_ready_ = false;

  void split_stiffness() {
    int ni = int(interior_.size()), nb = int(m_.boundary_loop.size());
    std::vector<Eigen::Triplet<double>> tii, tib, tbi, tbb;
    for (int k = 0; k < K_.outerSize(); ++k)
      for (SpMat::InnerIterator it(K_, k); it; ++it) {
        int r = int(it.row()), c = int(it.col());
        int lr = local_[r], lc = local_[c];
        bool br = is_boundary_[r], bc = is_boundary_[c];
        if (!br && !bc) tii.emplace_back(lr, lc, it.value());
        else if (!br && bc) tib.emplace_back(lr, lc, it.value());
        else if (br && !bc) tbi.emplace_back(lr, lc, it.value());
        else tbb.emplace_back(lr, lc, it.value());
      }
    Kii_.resize(ni, ni);
    Kib_.resize(ni, nb);
    Kbi_.resize(nb, ni);
    Kbb_.resize(nb, nb);
    Kii_.setFromTriplets(tii.begin(), tii.end());
    Kib_.setFromTriplets(tib.begin(), tib.end());
    Kbi_.setFromTriplets(tbi.begin(), tbi.end());
    Kbb_.setFromTriplets(tbb.begin(), tbb.end());
    solver_.compute(Kii_);
    if (solver_.info() != Eigen::Success) throw FemError("interior stiffness block is singular");
  }

  void ensure_pinned() const {
    if (pinned_ready_) return;
    SpMat Kr = K_.bottomRightCorner(m_.vertex_count - 1, m_.vertex_count - 1);
    pinned_.compute(Kr);
    if (pinned_.info() != Eigen::Success) throw FemError("pinned Laplacian factorization failed");
    pinned_ready_ = true;
  }

  Vec weak_abs(const Eigen::VectorXd& X) const {
    Vec d = Vec::Zero(m_.vertex_count);
    for (std::size_t e = 0; e < m_.edges.size(); ++e) {
      auto [a, b] = m_.edges[e];
      d[a] += std::abs(w_[e] * X[e]);
      d[b] += std::abs(w_[e] * X[e]);
    }
    return d;
  }

  const Eigen::Vector2d& corner(int t, int v) const {
    const auto& tr = m_.triangles[t];
    for (int c = 0; c < 3; ++c)
      if (tr[c] == v) return frames_[t][c];
    throw FemError("vertex not in triangle");
  }

  Eigen::Vector2d solve_frame(int t, double d1, double d2) const {
    const auto& p = frames_[t];
    Eigen::Matrix2d M;
    M.row(0) = p[1] - p[0];
    M.row(1) = p[2] - p[0];
    return M.inverse() * Eigen::Vector2d(d1, d2);
  }

  template <class F>
  void visit_left(const Cycle& c, const Corners& cn, F&& fn) const {
    const auto& v = c.vertices;
    int n = int(v.size());
    for (int i = 0; i < n; ++i) {
      int cur = v[i], nxt = v[(i + 1) % n], prv = v[(i + n - 1) % n];
      int x = cn(cur, nxt);
      while (x != prv) {
        if (x < 0) throw FemError("cycle touches the boundary");
        fn(cur, x, m_.edge_id(cur, x));
        x = cn(cur, x);
      }
    }
  }
};

}  // namespace dnp
