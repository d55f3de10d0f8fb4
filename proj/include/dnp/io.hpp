#pragma once

#include <fstream>
#include <string>

#include "json.hpp"
#include "mesh_geometry.hpp"
#include "pipeline.hpp"

namespace dnp {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os << j.dump(2) << '\n';
}

inline nlohmann::json mesh_to_json(const TriMesh& m) {
  nlohmann::json j;
  j["vertices"] = m.vertex_count;
  j["triangles"] = m.triangles;
  auto el = nlohmann::json::array();
  for (std::size_t e = 0; e < m.edges.size(); ++e) el.push_back({m.edges[e][0], m.edges[e][1], m.edge_lengths[e]});
  j["edge_lengths"] = el;
  j["boundary_loop"] = m.boundary_loop;
  j["genus"] = m.genus;
  return j;
}

inline TriMesh mesh_from_json(const nlohmann::json& j) {
  TriMesh m;
  try {
    m.vertex_count = j.at("vertices").get<int>();
    m.triangles = j.at("triangles").get<std::vector<std::array<int, 3>>>();
    m.boundary_loop = j.at("boundary_loop").get<std::vector<int>>();
    m.genus = j.at("genus").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("mesh file: ") + e.what());
  }
  for (const auto& t : m.triangles)
    for (int v : t)
      if (v < 0 || v >= m.vertex_count) throw IoError("mesh file: triangle index out of range");
  m.index_edges();
  m.edge_lengths.assign(m.edges.size(), -1.0);
  try {
    for (const auto& e : j.at("edge_lengths")) {
      int a = e.at(0).get<int>(), b = e.at(1).get<int>();
      if (!m.has_edge(a, b)) throw IoError("mesh file: length given for a non-edge");
      m.edge_lengths[m.edge_id(a, b)] = e.at(2).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("mesh file: edge_lengths: ") + e.what());
  }
  for (double l : m.edge_lengths)
    if (!(l > 0)) throw IoError("mesh file: missing or non-positive edge length");
  auto r = validate(m);
  if (!r.ok) throw IoError("mesh file: " + r.message);
  return m;
}

inline nlohmann::json matrix_json(const Mat& m) {
  std::vector<double> v;
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
  return v;
}

inline nlohmann::json matrix_json(const IMat& m) {
  std::vector<int> v;
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
  return v;
}

inline nlohmann::json siegel_json(const SiegelReport& s) {
  return {{"symmetry_residual", s.symmetry_residual},
          {"min_imag_eigenvalue", s.min_imag_eigenvalue},
          {"relation_residual", s.relation_residual},
          {"pass", s.pass}};
}

inline nlohmann::json periods_json(const PeriodMatrices& p) {
  return {{"genus", p.genus},
          {"aux", matrix_json(p.aux)},
          {"b_real", matrix_json(Mat(p.bmat.real()))},
          {"b_imag", matrix_json(Mat(p.bmat.imag()))},
          {"siegel_report", siegel_json(p.siegel)}};
}

inline nlohmann::json params_json(const Vec& x) { return std::vector<double>(x.data(), x.data() + x.size()); }

inline nlohmann::json result_json(const PipelineResult& r) {
  nlohmann::json j = periods_json(r.periods);
  nlohmann::json d;
  d["genus"] = r.eigen.genus;
  d["genus_ambiguous"] = r.genus_report.ambiguous;
  d["genus_margin"] = std::isfinite(r.genus_report.margin) ? r.genus_report.margin : -1.0;
  d["mus"] = r.eigen.mus;
  d["eigen_residuals"] = r.eigen.residuals;
  d["lattice_size"] = r.lattice.size();
  d["ball_radius"] = r.ball_radius;
  d["enlargements"] = r.enlargements;
  d["pairing_rounding_error"] = r.pairing.max_rounding_error;
  d["canonical_rounding_error"] = r.canonical_pairing.max_rounding_error;
  d["reduction"] = matrix_json(r.reduction);
  j["diagnostics"] = d;
  auto basis = nlohmann::json::array();
  for (std::size_t i = 0; i < r.canonical.size(); ++i) {
    Vec row = r.canonical_pairing.real_matrix.row(i);
    basis.push_back({{"params", params_json(r.canonical[i].params.flat())},
                     {"pairing_row", params_json(row)},
                     {"residual", r.canonical[i].residual}});
  }
  j["canonical_basis"] = basis;
  return j;
}

// alpha_1..alpha_g,beta_1..beta_g,residual
inline std::string lattice_csv(const std::vector<LatticePoint>& pts, int g) {
  std::string s;
  for (int k = 1; k <= g; ++k) s += "alpha_" + std::to_string(k) + ",";
  for (int k = 1; k <= g; ++k) s += "beta_" + std::to_string(k) + ",";
  s += "residual\n";
  char buf[64];
  for (const auto& p : pts) {
    for (int j = 0; j < p.x.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.12g,", p.x[j]);
      s += buf;
    }
    std::snprintf(buf, sizeof buf, "%.6g\n", p.relative);
    s += buf;
  }
  return s;
}

}  // namespace dnp
