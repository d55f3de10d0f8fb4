#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace dnp {

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Triangulated surface with an intrinsic metric. Triangles are listed
// counterclockwise; boundary_loop runs with the surface on its left.
struct TriMesh {
  int vertex_count = 0;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 2>> edges;  // a < b
  std::vector<double> edge_lengths;
  std::vector<int> boundary_loop;
  int genus = 0;
  int orientation = 1;

  std::unordered_map<std::uint64_t, int> edge_index;
  std::vector<std::array<int, 3>> tri_edges;  // edge opposite each corner

  static std::uint64_t key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
  }

  int edge_id(int a, int b) const {
    auto it = edge_index.find(key(a, b));
    if (it == edge_index.end())
      throw MeshError("no edge between " + std::to_string(a) + " and " + std::to_string(b));
    return it->second;
  }
  bool has_edge(int a, int b) const { return edge_index.count(key(a, b)) > 0; }
  double length(int a, int b) const { return edge_lengths[edge_id(a, b)]; }

  int euler_characteristic() const {
    return vertex_count - int(edges.size()) + int(triangles.size());
  }

  // Rebuild edge tables from triangles; edge_lengths are not touched.
  void index_edges() {
    edge_index.clear();
    tri_edges.assign(triangles.size(), {});
    std::vector<std::array<int, 2>> e;
    for (std::size_t t = 0; t < triangles.size(); ++t) {
      const auto& tr = triangles[t];
      for (int c = 0; c < 3; ++c) {
        int a = tr[(c + 1) % 3], b = tr[(c + 2) % 3];
        auto k = key(a, b);
        auto it = edge_index.find(k);
        int id;
        if (it == edge_index.end()) {
          id = int(e.size());
          edge_index.emplace(k, id);
          e.push_back({std::min(a, b), std::max(a, b)});
        } else {
          id = it->second;
        }
        tri_edges[t][c] = id;
      }
    }
    edges = std::move(e);
  }
};

inline double triangle_area(double a, double b, double c) {
  double s = 0.25 * std::sqrt(std::max(0.0, (a + b + c) * (-a + b + c) * (a - b + c) * (a + b - c)));
  return s;
}

// Local frame of triangle t: corner 0 at the origin, corner 1 on the +x axis.
inline std::array<Eigen::Vector2d, 3> triangle_frame(const TriMesh& m, int t) {
  const auto& e = m.tri_edges[t];
  double l12 = m.edge_lengths[e[0]], l02 = m.edge_lengths[e[1]], l01 = m.edge_lengths[e[2]];
  double x2 = (l01 * l01 + l02 * l02 - l12 * l12) / (2.0 * l01);
  double y2 = std::sqrt(std::max(0.0, l02 * l02 - x2 * x2));
  return {Eigen::Vector2d(0, 0), Eigen::Vector2d(l01, 0), Eigen::Vector2d(x2, y2)};
}

inline double triangle_area(const TriMesh& m, int t) {
  const auto& e = m.tri_edges[t];
  return triangle_area(m.edge_lengths[e[0]], m.edge_lengths[e[1]], m.edge_lengths[e[2]]);
}

struct MeshReport {
  int euler = 0;
  int boundary_components = 0;
  bool ok = false;
  std::string message;
};

inline std::vector<std::vector<int>> boundary_components(const TriMesh& m) {
  // directed boundary edges a->b as they appear in the triangles
  std::unordered_map<std::uint64_t, int> count;
  for (const auto& tr : m.triangles)
    for (int c = 0; c < 3; ++c) count[TriMesh::key(tr[c], tr[(c + 1) % 3])]++;
  std::unordered_map<int, int> next;
  for (const auto& tr : m.triangles)
    for (int c = 0; c < 3; ++c) {
      int a = tr[c], b = tr[(c + 1) % 3];
      if (count[TriMesh::key(a, b)] == 1) {
        if (next.count(a)) throw MeshError("boundary vertex " + std::to_string(a) + " is pinched");
        next[a] = b;
      }
    }
  std::vector<int> starts;
  for (auto& kv : next) starts.push_back(kv.first);
  std::sort(starts.begin(), starts.end());
  std::vector<char> seen(m.vertex_count, 0);
  std::vector<std::vector<int>> loops;
  for (int s : starts) {
    if (seen[s]) continue;
    std::vector<int> loop;
    int v = s;
    while (!seen[v]) {
      seen[v] = 1;
      loop.push_back(v);
      auto it = next.find(v);
      if (it == next.end()) throw MeshError("open boundary chain at vertex " + std::to_string(v));
      v = it->second;
    }
    if (v != s) throw MeshError("boundary chain does not close at " + std::to_string(s));
    loops.push_back(std::move(loop));
  }
  return loops;
}

inline MeshReport validate(const TriMesh& m, double tri_tol = 1e-12) {
  MeshReport r;
  r.euler = m.euler_characteristic();
  auto fail = [&](std::string msg) {
    r.ok = false;
    r.message = std::move(msg);
    return r;
  };
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& e = m.tri_edges[t];
    double a = m.edge_lengths[e[0]], b = m.edge_lengths[e[1]], c = m.edge_lengths[e[2]];
    double scale = a + b + c;
    if (!(a > 0 && b > 0 && c > 0) || a + b - c <= tri_tol * scale || b + c - a <= tri_tol * scale ||
        a + c - b <= tri_tol * scale)
      return fail("triangle " + std::to_string(t) + " violates the triangle inequality");
  }
  // orientation: each directed edge at most once
  std::unordered_map<std::uint64_t, int> directed;
  for (const auto& tr : m.triangles)
    for (int c = 0; c < 3; ++c) {
      std::uint64_t k = (std::uint64_t(std::uint32_t(tr[c])) << 32) | std::uint32_t(tr[(c + 1) % 3]);
      if (++directed[k] > 1) return fail("inconsistent triangle orientation");
    }
  std::vector<std::vector<int>> loops;
  try {
    loops = boundary_components(m);
  } catch (const MeshError& e) {
    return fail(e.what());
  }
  r.boundary_components = int(loops.size());
  if (loops.size() != 1) return fail("expected one boundary component, found " + std::to_string(loops.size()));
  if (r.euler != 1 - 2 * m.genus)
    return fail("Euler characteristic " + std::to_string(r.euler) + " does not match genus " +
                std::to_string(m.genus));
  const auto& bl = m.boundary_loop;
  if (bl.size() != loops[0].size()) return fail("boundary_loop length mismatch");
  for (std::size_t i = 0; i < bl.size(); ++i) {
    int a = bl[i], b = bl[(i + 1) % bl.size()];
    std::uint64_t k = (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
    if (!directed.count(k) || directed.count((std::uint64_t(std::uint32_t(b)) << 32) | std::uint32_t(a)))
      return fail("boundary_loop does not follow the induced orientation");
  }
  r.ok = true;
  return r;
}

namespace detail {

struct PlanarTri {
  std::array<int, 3> v;
  std::array<Eigen::Vector2d, 3> p;
};

inline TriMesh assemble(int nv, const std::vector<PlanarTri>& tris, std::vector<int> boundary, int genus) {
  TriMesh m;
  m.vertex_count = nv;
  m.genus = genus;
  m.boundary_loop = std::move(boundary);
  for (const auto& t : tris) m.triangles.push_back(t.v);
  m.index_edges();
  m.edge_lengths.assign(m.edges.size(), 0.0);
  for (std::size_t t = 0; t < tris.size(); ++t)
    for (int c = 0; c < 3; ++c) {
      double l = (tris[t].p[(c + 1) % 3] - tris[t].p[(c + 2) % 3]).norm();
      m.edge_lengths[m.tri_edges[t][c]] = l;
    }
  return m;
}

inline void push_ccw(std::vector<PlanarTri>& out, std::array<int, 3> v, std::array<Eigen::Vector2d, 3> p) {
  Eigen::Vector2d u = p[1] - p[0], w = p[2] - p[0];
  if (u.x() * w.y() - u.y() * w.x() < 0) {
    std::swap(v[1], v[2]);
    std::swap(p[1], p[2]);
  }
  out.push_back({v, p});
}

// O-grid between a circle of radius R and the square [-1/2,1/2]^2, both
// centred at the origin. Layer 0 is the circle, layer m the square.
struct OGrid {
  int n_theta = 0, layers = 0;
  std::vector<Eigen::Vector2d> pos;  // layer-major, unidentified
  std::vector<PlanarTri> tris;       // indices into pos
};

inline Eigen::Vector2d square_point(int j, int n_theta) {
  double t = double(j) / (n_theta / 4);
  int side = int(std::floor(t));
  double u = t - side;
  switch (side % 4) {
    case 0: return {-0.5 + u, -0.5};
    case 1: return {0.5, -0.5 + u};
    case 2: return {0.5 - u, 0.5};
    default: return {-0.5, 0.5 - u};
  }
}

inline OGrid ogrid(int n_theta, int layers, double radius, double grading) {
  OGrid g;
  g.n_theta = n_theta;
  g.layers = layers;
  const double pi = std::acos(-1.0);
  double th0 = std::atan2(-0.5, -0.5);
  for (int k = 0; k <= layers; ++k) {
    double s = std::pow(double(k) / layers, grading);
    for (int j = 0; j < n_theta; ++j) {
      double th = th0 + 2 * pi * j / n_theta;
      Eigen::Vector2d c(radius * std::cos(th), radius * std::sin(th));
      g.pos.push_back((1 - s) * c + s * square_point(j, n_theta));
    }
  }
  auto id = [&](int k, int j) { return k * n_theta + ((j % n_theta) + n_theta) % n_theta; };
  for (int k = 0; k < layers; ++k)
    for (int j = 0; j < n_theta; ++j) {
      int a = id(k, j), b = id(k, j + 1), c = id(k + 1, j + 1), d = id(k + 1, j);
      const auto &pa = g.pos[a], &pb = g.pos[b], &pc = g.pos[c], &pd = g.pos[d];
      if ((pa - pc).norm() <= (pb - pd).norm()) {
        push_ccw(g.tris, {a, c, b}, {pa, pc, pb});
        push_ccw(g.tris, {a, d, c}, {pa, pd, pc});
      } else {
        push_ccw(g.tris, {a, d, b}, {pa, pd, pb});
        push_ccw(g.tris, {b, d, c}, {pb, pd, pc});
      }
    }
  return g;
}

// Integer key of a point of the unit torus on a lattice of spacing 1/q.
inline std::pair<long, long> torus_key(const Eigen::Vector2d& p, long q) {
  auto wrap = [&](double x) {
    long v = std::lround((x + 0.5) * q) % q;
    return v < 0 ? v + q : v;
  };
  return {wrap(p.x()), wrap(p.y())};
}

inline void compact(int& nv, std::vector<PlanarTri>& tris, std::vector<int>& boundary) {
  std::vector<int> remap(nv, -1);
  int next = 0;
  for (auto& t : tris)
    for (int& v : t.v) {
      if (remap[v] < 0) remap[v] = next++;
    }
  for (auto& t : tris)
    for (int& v : t.v) v = remap[v];
  for (int& v : boundary) v = remap[v];
  nv = next;
}

}  // namespace detail

struct TorusParams {
  int n_theta_per_resolution = 32;
  int layers_per_resolution = 8;
  double grading = 1.5;
};

// Unit flat torus with a round hole. The boundary polygon has 32*resolution
// vertices, the O-grid 8*resolution graded radial layers.
inline TriMesh build_flat_torus_with_hole(int resolution, double hole_radius, TorusParams prm = {}) {
  if (resolution < 8 || resolution % 2) throw MeshError("resolution must be even and at least 8");
  if (!(hole_radius > 0) || !(hole_radius < 0.4)) throw MeshError("hole_radius must lie in (0, 0.4)");
  int n_theta = prm.n_theta_per_resolution * resolution;
  int layers = prm.layers_per_resolution * resolution;
  auto g = detail::ogrid(n_theta, layers, hole_radius, prm.grading);

  int nv = int(g.pos.size());
  std::vector<int> rep(nv);
  std::iota(rep.begin(), rep.end(), 0);
  std::map<std::pair<long, long>, int> seen;
  for (int j = 0; j < n_theta; ++j) {
    int v = layers * n_theta + j;
    auto k = detail::torus_key(g.pos[v], 4L * n_theta);
    auto it = seen.find(k);
    if (it == seen.end()) seen.emplace(k, v);
    else rep[v] = it->second;
  }
  for (auto& t : g.tris)
    for (int& v : t.v) v = rep[v];
  std::vector<int> boundary;
  boundary.push_back(0);
  for (int j = n_theta - 1; j > 0; --j) boundary.push_back(j);
  detail::compact(nv, g.tris, boundary);
  TriMesh m = detail::assemble(nv, g.tris, std::move(boundary), 1);
  auto rep_ = validate(m);
  if (!rep_.ok) throw MeshError("torus generation failed: " + rep_.message);
  return m;
}

// Three unit squares in an L shape, opposite sides of each row and column
// identified. All corners meet in one cone point of angle 6π; the hole is
// a round disk about it, so three O-grids chained along the ray θ = 0 cover
// the surface. The quarter squares around the cone point tile everything.
inline TriMesh build_genus2_with_hole(int resolution, double hole_radius = 0.2, TorusParams prm = {}) {
  if (resolution < 4 || resolution % 2) throw MeshError("resolution must be even and at least 4");
  if (!(hole_radius > 0) || !(hole_radius < 0.4)) throw MeshError("hole_radius must lie in (0, 0.4)");
  int N = prm.n_theta_per_resolution * resolution;
  int layers = prm.layers_per_resolution * resolution;
  int s = N / 4;  // lattice cells per unit length
  auto g = detail::ogrid(N, layers, hole_radius, prm.grading);
  int nA = int(g.pos.size());
  int j_ray = 3 * N / 8;  // square_point(j_ray) = (1/2, 0)

  // walk around the cone point: square lying in quadrant q (ccw from (+,+))
  // and the corner of that square sitting at the cone point
  const int across[3] = {1, 0, 2}, vert[3] = {2, 1, 0};
  const Eigen::Vector2d origin[3] = {{0, 0}, {1, 0}, {0, 1}};
  std::array<Eigen::Vector2d, 12> corner;
  {
    int sq = 0;
    for (int q = 0; q < 12; ++q) {
      int quad = q % 4;
      if (q > 0) sq = (quad == 1 || quad == 3) ? across[sq] : vert[sq];
      Eigen::Vector2d off(quad == 1 || quad == 2 ? 1 : 0, quad >= 2 ? 1 : 0);
      corner[q] = origin[sq] + off;
    }
  }

  std::map<std::pair<int, int>, int> lattice;
  std::vector<int> parent;
  auto node = [&](int X, int Y) {
    auto it = lattice.find({X, Y});
    if (it != lattice.end()) return it->second;
    int id = int(parent.size());
    parent.push_back(id);
    lattice.emplace(std::make_pair(X, Y), id);
    return id;
  };
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  for (int Y = 0; Y <= s; ++Y) unite(node(0, Y), node(2 * s, Y));
  for (int Y = s; Y <= 2 * s; ++Y) unite(node(0, Y), node(s, Y));
  for (int X = 0; X <= s; ++X) unite(node(X, 0), node(X, 2 * s));
  for (int X = s; X <= 2 * s; ++X) unite(node(X, 0), node(X, s));

  std::map<int, int> lattice_vertex;
  int next = 3 * nA;
  auto lattice_id = [&](int X, int Y) {
    int r = find(node(X, Y));
    auto it = lattice_vertex.find(r);
    if (it != lattice_vertex.end()) return it->second;
    lattice_vertex.emplace(r, next);
    return next++;
  };
  const double pi = std::acos(-1.0);
  auto quadrant = [&](const Eigen::Vector2d& p, int copy) {
    double phi = std::atan2(p.y(), p.x());
    if (phi < 0) phi += 2 * pi;
    return std::min(3, int(phi / (0.5 * pi))) + 4 * copy;
  };
  std::vector<int> vid(3 * nA);
  for (int k = 0; k < 3; ++k)
    for (int v = 0; v < nA; ++v) {
      if (v < layers * N) {
        vid[k * nA + v] = k * nA + v;
      } else {
        const auto& p = g.pos[v];
        Eigen::Vector2d x = corner[quadrant(p, k)] + p;
        vid[k * nA + v] = lattice_id(int(std::lround(x.x() * s)), int(std::lround(x.y() * s)));
      }
    }
  std::vector<detail::PlanarTri> tris;
  for (int k = 0; k < 3; ++k)
    for (auto t : g.tris) {
      Eigen::Vector2d c = (t.p[0] + t.p[1] + t.p[2]) / 3.0;
      bool before_ray = c.x() > 0 && c.y() < 0;  // last sector of this copy
      for (int& v : t.v) {
        int j = v % N;
        int kk = (before_ray && j == j_ray) ? (k + 1) % 3 : k;
        v = vid[kk * nA + v];
      }
      tris.push_back(t);
    }
  std::vector<int> boundary{vid[j_ray]};
  for (int k = 2; k >= 0; --k)
    for (int t = 1; t <= N; ++t) boundary.push_back(vid[k * nA + ((j_ray - t) % N + N) % N]);
  boundary.pop_back();
  int nv = next;
  detail::compact(nv, tris, boundary);
  TriMesh m = detail::assemble(nv, tris, std::move(boundary), 2);
  auto r = validate(m);
  if (!r.ok) throw MeshError("genus-2 generation failed: " + r.message);
  return m;
}

// Flat unit disk: concentric rings with 6k vertices on ring k.
inline TriMesh build_disk(int rings) {
  if (rings < 2) throw MeshError("disk needs at least two rings");
  const double pi = std::acos(-1.0);
  std::vector<Eigen::Vector2d> pos{{0, 0}};
  std::vector<int> start{0};
  for (int k = 1; k <= rings; ++k) {
    start.push_back(int(pos.size()));
    int n = 6 * k;
    for (int j = 0; j < n; ++j) {
      double th = 2 * pi * j / n;
      pos.emplace_back(double(k) / rings * std::cos(th), double(k) / rings * std::sin(th));
    }
  }
  std::vector<detail::PlanarTri> tris;
  for (int j = 0; j < 6; ++j) {
    int a = 0, b = 1 + j, c = 1 + (j + 1) % 6;
    detail::push_ccw(tris, {a, b, c}, {pos[a], pos[b], pos[c]});
  }
  for (int k = 1; k < rings; ++k) {
    int n0 = 6 * k, n1 = 6 * (k + 1);
    int i = 0, j = 0;
    auto in = [&](int t) { return start[k] + t % n0; };
    auto out = [&](int t) { return start[k + 1] + t % n1; };
    while (i < n0 || j < n1) {
      double ai = double(i + 1) / n0, aj = double(j + 1) / n1;
      if (j < n1 && (i >= n0 || aj <= ai)) {
        int a = in(i), b = out(j), c = out(j + 1);
        detail::push_ccw(tris, {a, b, c}, {pos[a], pos[b], pos[c]});
        ++j;
      } else {
        int a = in(i), b = out(j), c = in(i + 1);
        detail::push_ccw(tris, {a, b, c}, {pos[a], pos[b], pos[c]});
        ++i;
      }
    }
  }
  std::vector<int> boundary;
  for (int j = 0; j < 6 * rings; ++j) boundary.push_back(start[rings] + j);
  TriMesh m = detail::assemble(int(pos.size()), tris, std::move(boundary), 0);
  auto r = validate(m);
  if (!r.ok) throw MeshError("disk generation failed: " + r.message);
  return m;
}

// ---------------------------------------------------------------------------
// homology

struct Cycle {
  std::vector<int> vertices;  // closed: last connects back to first
};

struct CycleBasis {
  std::vector<Cycle> cycles;
  Eigen::MatrixXi intersection;
};

// Third vertex x of the counterclockwise triangle (a, b, x).
struct Corners {
  std::unordered_map<std::uint64_t, int> third;
  explicit Corners(const TriMesh& m) {
    third.reserve(m.triangles.size() * 3);
    for (const auto& t : m.triangles)
      for (int c = 0; c < 3; ++c) third[dkey(t[c], t[(c + 1) % 3])] = t[(c + 2) % 3];
  }
  static std::uint64_t dkey(int a, int b) { return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b); }
  int operator()(int a, int b) const {
    auto it = third.find(dkey(a, b));
    return it == third.end() ? -1 : it->second;
  }
};

// Edge 1-cochain dual to a cycle pushed slightly to its left: +1 on every
// edge leaving a cycle vertex into the left sector.
inline Eigen::VectorXd left_cochain(const TriMesh& m, const Corners& cn, const Cycle& c) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m.edges.size());
  const auto& v = c.vertices;
  int n = int(v.size());
  for (int i = 0; i < n; ++i) {
    int cur = v[i], nxt = v[(i + 1) % n], prv = v[(i + n - 1) % n];
    int x = cn(cur, nxt);
    int guard = 0;
    while (x != prv) {
      if (x < 0 || ++guard > 10000) throw MeshError("cycle vertex " + std::to_string(cur) + " has an open one-ring");
      int e = m.edge_id(cur, x);
      w[e] += (cur == m.edges[e][0]) ? 1.0 : -1.0;
      x = cn(cur, x);
    }
  }
  return w;
}

inline double cochain_along(const TriMesh& m, const Eigen::VectorXd& w, const Cycle& c) {
  double s = 0;
  int n = int(c.vertices.size());
  for (int i = 0; i < n; ++i) {
    int a = c.vertices[i], b = c.vertices[(i + 1) % n];
    int e = m.edge_id(a, b);
    s += (a == m.edges[e][0]) ? w[e] : -w[e];
  }
  return s;
}

inline long long det_integer(Eigen::MatrixXi a) {
  // Bareiss fraction-free elimination
  int n = int(a.rows());
  if (n == 0) return 1;
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> m = a.cast<long long>();
  long long sign = 1, prev = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (m(k, k) == 0) {
      int p = k + 1;
      while (p < n && m(p, k) == 0) ++p;
      if (p == n) return 0;
      m.row(k).swap(m.row(p));
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
    prev = m(k, k);
  }
  return sign * m(n - 1, n - 1);
}

// Tree-cotree on the submesh of triangles that avoid boundary vertices, so
// every cycle runs through interior edges only.
inline CycleBasis homology_basis(const TriMesh& m) {
  int chi = m.euler_characteristic();
  if (chi != 1 - 2 * m.genus)
    throw MeshError("Euler characteristic " + std::to_string(chi) + " inconsistent with genus " +
                    std::to_string(m.genus));
  CycleBasis cb;
  if (m.genus == 0) {
    cb.intersection.resize(0, 0);
    return cb;
  }
  std::vector<char> on_boundary(m.vertex_count, 0);
  for (int v : m.boundary_loop) on_boundary[v] = 1;
  std::vector<int> sub;  // triangle ids
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tr = m.triangles[t];
    if (!on_boundary[tr[0]] && !on_boundary[tr[1]] && !on_boundary[tr[2]]) sub.push_back(int(t));
  }
  // submesh edges with their incident submesh triangles
  std::map<int, std::vector<int>> edge_faces;
  for (int f = 0; f < int(sub.size()); ++f)
    for (int c = 0; c < 3; ++c) edge_faces[m.tri_edges[sub[f]][c]].push_back(f);
  std::vector<std::vector<std::pair<int, int>>> adj(m.vertex_count);  // (neighbor, edge)
  int root = -1;
  for (auto& kv : edge_faces) {
    auto [a, b] = m.edges[kv.first];
    adj[a].push_back({b, kv.first});
    adj[b].push_back({a, kv.first});
    if (root < 0 || std::min(a, b) < root) root = std::min(a, b);
  }
  for (auto& l : adj) std::sort(l.begin(), l.end());

  std::vector<int> parent(m.vertex_count, -1), parent_edge(m.vertex_count, -1), depth(m.vertex_count, -1);
  std::vector<char> in_tree(m.edges.size(), 0);
  std::queue<int> q;
  q.push(root);
  depth[root] = 0;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (auto [w, e] : adj[v])
      if (depth[w] < 0) {
        depth[w] = depth[v] + 1;
        parent[w] = v;
        parent_edge[w] = e;
        in_tree[e] = 1;
        q.push(w);
      }
  }
  // dual spanning tree; node sub.size() caps the hole of the submesh
  int cap = int(sub.size());
  std::vector<std::vector<std::pair<int, int>>> dadj(sub.size() + 1);
  for (auto& kv : edge_faces) {
    if (in_tree[kv.first]) continue;
    int f0 = kv.second[0], f1 = kv.second.size() > 1 ? kv.second[1] : cap;
    dadj[f0].push_back({f1, kv.first});
    dadj[f1].push_back({f0, kv.first});
  }
  for (auto& l : dadj) std::sort(l.begin(), l.end(), [](auto x, auto y) { return x.second < y.second; });
  std::vector<char> dseen(sub.size() + 1, 0), in_cotree(m.edges.size(), 0);
  q.push(cap);
  dseen[cap] = 1;
  while (!q.empty()) {
    int f = q.front();
    q.pop();
    for (auto [g, e] : dadj[f])
      if (!dseen[g]) {
        dseen[g] = 1;
        in_cotree[e] = 1;
        q.push(g);
      }
  }
  for (auto& kv : edge_faces) {
    int e = kv.first;
    if (in_tree[e] || in_cotree[e]) continue;
    auto [u, v] = m.edges[e];
    // u -> v, then tree path back from v to u
    std::vector<int> up, vp;
    int a = u, b = v;
    while (depth[a] > depth[b]) { up.push_back(a); a = parent[a]; }
    while (depth[b] > depth[a]) { vp.push_back(b); b = parent[b]; }
    while (a != b) {
      up.push_back(a);
      vp.push_back(b);
      a = parent[a];
      b = parent[b];
    }
    Cycle c;
    for (int x : vp) c.vertices.push_back(x);  // v ... (child of lca)
    c.vertices.push_back(a);                   // lca
    for (auto it = up.rbegin(); it != up.rend(); ++it) c.vertices.push_back(*it);  // ... u
    // now c runs v -> lca -> u, closing with edge u -> v
    cb.cycles.push_back(std::move(c));
  }
  int ng = int(cb.cycles.size());
  if (ng != 2 * m.genus)
    throw MeshError("tree-cotree produced " + std::to_string(ng) + " cycles, expected " +
                    std::to_string(2 * m.genus));
  Corners cn(m);
  cb.intersection.resize(ng, ng);
  for (int i = 0; i < ng; ++i) {
    Eigen::VectorXd w = left_cochain(m, cn, cb.cycles[i]);
    for (int j = 0; j < ng; ++j) cb.intersection(i, j) = int(std::lround(cochain_along(m, w, cb.cycles[j])));
  }
  return cb;
}

}  // namespace dnp
