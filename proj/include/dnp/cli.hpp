#pragma once

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "io.hpp"
#include "noise_harness.hpp"
#include "pipeline.hpp"

namespace dnp {

enum ExitCode { kOk = 0, kUsage = 2, kInvariant = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --config overrides; unknown keys are rejected so typos do not pass silently.
inline void apply_config(const nlohmann::json& j, PipelineConfig& c, SweepOptions* sweep = nullptr) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  auto positive = [](const std::string& k, double v) {
    if (!(v > 0)) throw UsageError("config: `" + k + "` must be positive");
    return v;
  };
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "delta") c.delta = positive(k, v.get<double>());
      else if (k == "cluster_tol") c.cluster_tol = positive(k, v.get<double>());
      else if (k == "rounding_tol") c.rounding_tol = positive(k, v.get<double>());
      else if (k == "siegel_tol") c.siegel_tol = positive(k, v.get<double>());
      else if (k == "symmetry_tol") c.symmetry_tol = positive(k, v.get<double>());
      else if (k == "snapped") c.snapped = v.get<bool>();
      else if (k == "lattice") {
        auto& l = c.lattice;
        for (const auto& [lk, lv] : v.items()) {
          if (lk == "tol_relative") l.tol_relative = positive(lk, lv.get<double>());
          else if (lk == "dedup_radius") l.dedup_radius = positive(lk, lv.get<double>());
          else if (lk == "start_radius") l.start_radius = positive(lk, lv.get<double>());
          else if (lk == "spacing") l.spacing = positive(lk, lv.get<double>());
          else if (lk == "growth") l.growth = positive(lk, lv.get<double>());
          else if (lk == "generator_tol") l.generator_tol = positive(lk, lv.get<double>());
          else if (lk == "max_enlargements") l.max_enlargements = lv.get<int>();
          else if (lk == "max_iter") l.max_iter = lv.get<int>();
          else throw UsageError("config: unknown lattice key `" + lk + "`");
        }
      } else if (k == "noise" && sweep) {
        for (const auto& [nk, nv] : v.items()) {
          if (nk == "epsilons") sweep->epsilons = nv.get<std::vector<double>>();
          else if (nk == "trials") sweep->trials = nv.get<int>();
          else if (nk == "model") sweep->model = noise_model_from_string(nv.get<std::string>());
          else if (nk == "seed") sweep->seed = nv.get<std::uint64_t>();
          else if (nk == "max_match_distance") sweep->max_match_distance = positive(nk, nv.get<double>());
          else throw UsageError("config: unknown noise key `" + nk + "`");
        }
      } else if (k != "noise") {
        throw UsageError("config: unknown key `" + k + "`");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const NoiseError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

struct CommonArgs {
  std::string output, config;
  std::optional<double> tol, delta;
  std::optional<std::uint64_t> seed;
};

inline void add_common(CLI::App* app, CommonArgs& a) {
  app->add_option("-o,--output", a.output, "output path");
  app->add_option("--tol", a.tol, "tolerance (meaning depends on the command)")->check(CLI::PositiveNumber);
  app->add_option("--delta", a.delta, "eigenvalue separation threshold")->check(CLI::PositiveNumber);
  app->add_option("--seed", a.seed, "random seed");
  app->add_option("--config", a.config, "JSON file overriding configuration");
}

inline void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream os(path);
  if (!os) throw UsageError("cannot write " + path);
  os << text;
}

inline PipelineConfig pipeline_config(const CommonArgs& a, SweepOptions* sweep = nullptr) {
  PipelineConfig c;
  if (!a.config.empty()) apply_config(read_json(a.config), c, sweep);
  if (a.delta) c.delta = *a.delta;
  return c;
}

inline DNMatrix load_dn_checked(const std::string& path) {
  try {
    return load_dn(path);
  } catch (const BoundaryError& e) {
    throw UsageError(e.what());
  }
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Period matrix of the double of a bordered surface from its Dirichlet-to-Neumann map"};
  app.require_subcommand(1);

  CommonArgs mg_args, dg_args, sp_args, rc_args, oc_args, ns_args;

  auto* mg = app.add_subcommand("mesh-gen", "generate a test surface mesh");
  int mg_genus = 1, mg_res = 16;
  double mg_hole = 0.2;
  mg->add_option("--genus", mg_genus, "1 or 2");
  mg->add_option("--resolution", mg_res, "mesh resolution");
  mg->add_option("--hole", mg_hole, "hole radius");
  add_common(mg, mg_args);

  auto* dg = app.add_subcommand("dn-gen", "synthesize a DN matrix");
  std::string dg_mesh;
  std::optional<int> dg_disk, dg_samples;
  dg->add_option("--mesh", dg_mesh, "mesh JSON");
  dg->add_option("--disk-analytic", dg_disk, "emit the analytic unit-disk DN map on n samples");
  dg->add_option("--samples", dg_samples, "boundary grid size (default: boundary vertices / 4 + 1)");
  add_common(dg, dg_args);

  auto* sp = app.add_subcommand("spectrum", "pencil eigenvalues and genus");
  std::string sp_dn;
  sp->add_option("--dn", sp_dn, "DN JSON")->required();
  add_common(sp, sp_args);

  auto* rc = app.add_subcommand("reconstruct", "run the boundary-only reconstruction");
  std::string rc_dn, rc_lattice;
  rc->add_option("--dn", rc_dn, "DN JSON")->required();
  rc->add_option("--lattice-csv", rc_lattice, "write the found lattice points as CSV");
  add_common(rc, rc_args);

  auto* oc = app.add_subcommand("oracle-compare", "compare boundary reconstruction with interior periods");
  std::string oc_mesh, oc_dn;
  oc->add_option("--mesh", oc_mesh, "mesh JSON")->required();
  oc->add_option("--dn", oc_dn, "DN JSON (default: synthesized from the mesh)");
  add_common(oc, oc_args);

  auto* ns = app.add_subcommand("noise-sweep", "stability of the reconstruction under DN noise");
  std::string ns_dn, ns_model;
  std::vector<double> ns_eps;
  std::optional<int> ns_trials;
  ns->add_option("--dn", ns_dn, "DN JSON")->required();
  ns->add_option("--model", ns_model, "random_symmetric or smooth_multiplicative");
  ns->add_option("--epsilons", ns_eps, "noise levels, ascending");
  ns->add_option("--trials", ns_trials, "trials per noise level");
  add_common(ns, ns_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*mg) {
      if (mg_genus != 1 && mg_genus != 2) throw UsageError("unsupported genus " + std::to_string(mg_genus));
      TriMesh m;
      try {
        m = mg_genus == 1 ? build_flat_torus_with_hole(mg_res, mg_hole) : build_genus2_with_hole(mg_res, mg_hole);
      } catch (const MeshError& e) {
        throw UsageError(e.what());
      }
      write_text(mg_args.output, mesh_to_json(m).dump() + "\n", out);
      err << "vertices " << m.vertex_count << ", euler " << m.euler_characteristic() << ", boundary "
          << m.boundary_loop.size() << "\n";
      return kOk;
    }
    if (*dg) {
      DNMatrix dn;
      if (dg_disk) {
        if (*dg_disk < 3) throw UsageError("--disk-analytic needs at least 3 samples");
        dn = disk_analytic_dn(*dg_disk);
      } else {
        if (dg_mesh.empty()) throw UsageError("dn-gen needs --mesh or --disk-analytic");
        TriMesh m = mesh_from_json(read_json(dg_mesh));
        FemOracle fem(m);
        int n = dg_samples ? *dg_samples : int(m.boundary_loop.size()) / 4 + 1;
        if (n < 3 || n > int(m.boundary_loop.size())) throw UsageError("--samples out of range");
        dn = fem.dn_map(n);
      }
      write_text(dg_args.output, dn_to_json(dn).dump() + "\n", out);
      return kOk;
    }
    if (*sp) {
      auto cfg = pipeline_config(sp_args);
      if (sp_args.tol) cfg.symmetry_tol = *sp_args.tol;
      DNMatrix dn = load_dn_checked(sp_dn);
      check_dn(dn, cfg.symmetry_tol);
      BoundaryProblem bp(dn);
      auto rep = detect_genus(bp.spec, cfg.delta);
      nlohmann::json j;
      j["genus"] = rep.genus;
      j["ambiguous"] = rep.ambiguous;
      j["delta"] = cfg.delta;
      j["mus"] = std::vector<double>(bp.spec.mus.data(), bp.spec.mus.data() + bp.spec.mus.size());
      write_text(sp_args.output, j.dump(2) + "\n", out);
      return kOk;
    }
    if (*rc) {
      auto cfg = pipeline_config(rc_args);
      if (rc_args.tol) cfg.rounding_tol = *rc_args.tol;
      DNMatrix dn = load_dn_checked(rc_dn);
      auto r = reconstruct(dn, cfg);
      write_text(rc_args.output, result_json(r).dump(2) + "\n", out);
      if (!rc_lattice.empty()) write_text(rc_lattice, lattice_csv(r.lattice, r.eigen.genus), out);
      if (!r.periods.siegel.pass) throw InvariantError("b-period matrix fails the Siegel check");
      return kOk;
    }
    if (*oc) {
      auto cfg = pipeline_config(oc_args);
      double gap_tol = oc_args.tol.value_or(1e-2);
      TriMesh m = mesh_from_json(read_json(oc_mesh));
      FemOracle fem(m);
      DNMatrix dn = oc_dn.empty() ? fem.dn_map(int(m.boundary_loop.size()) / 4 + 1) : load_dn_checked(oc_dn);
      check_dn(dn, cfg.symmetry_tol);
      BoundaryProblem bp(dn);
      auto r = reconstruct(bp, cfg);
      nlohmann::json j;
      j["mesh_genus"] = m.genus;
      j["boundary_genus"] = r.eigen.genus;
      if (r.eigen.genus != m.genus) {
        write_text(oc_args.output, j.dump(2) + "\n", out);
        throw InvariantError("genus mismatch: mesh " + std::to_string(m.genus) + ", boundary " +
                             std::to_string(r.eigen.genus));
      }
      double gap = 0;
      if (m.genus > 0) {
        OracleContext ctx(fem, dn.grid.n);
        auto o = oracle_aux_period_matrix(ctx, bp.ops, r.canonical);
        auto oa = oracle_aux_period_matrix(ctx, bp.ops, r.canonical, true);
        gap = (o.aux - r.periods.aux).norm();
        j["period_integrality"] = o.integrality;
        j["pairing_rounding_error"] = r.canonical_pairing.max_rounding_error;
        j["pairing_is_standard"] = r.canonical_pairing.integer_matrix == standard_symplectic(m.genus);
        j["aux_boundary"] = matrix_json(r.periods.aux);
        j["aux_oracle"] = matrix_json(o.aux);
        j["aux_gap_frobenius"] = gap;
        j["aux_gap_average_rule"] = (oa.aux - r.periods.aux).norm();
        j["dual_intersection_defect"] = o.dual_intersection_defect;
      }
      write_text(oc_args.output, j.dump(2) + "\n", out);
      if (gap > gap_tol) throw InvariantError("aux period gap " + std::to_string(gap) + " exceeds tolerance");
      return kOk;
    }
    if (*ns) {
      SweepOptions opt;
      opt.base = pipeline_config(ns_args, &opt);
      if (!ns_model.empty()) {
        try {
          opt.model = noise_model_from_string(ns_model);
        } catch (const NoiseError& e) {
          throw UsageError(e.what());
        }
      }
      if (!ns_eps.empty()) opt.epsilons = ns_eps;
      if (ns_trials) opt.trials = *ns_trials;
      if (ns_args.seed) opt.seed = *ns_args.seed;
      if (opt.trials < 1) throw UsageError("--trials must be positive");
      if (!std::is_sorted(opt.epsilons.begin(), opt.epsilons.end())) throw UsageError("--epsilons must be ascending");
      DNMatrix dn = load_dn_checked(ns_dn);
      auto s = stability_sweep(dn, opt);
      write_text(ns_args.output, sweep_csv(s), out);
      err << "slope " << s.slope << ", genus rate at eps <= 1e-3: " << s.genus_rate_small << "\n";
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "invariant failure: " << e.what() << "\n";
    return kInvariant;
  }
  return kUsage;
}

}  // namespace dnp
