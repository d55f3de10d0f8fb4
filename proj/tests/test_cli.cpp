#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <sys/wait.h>
#include <unistd.h>

#include "dnp/cli.hpp"

using namespace dnp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "dnp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  return {std::istreambuf_iterator<char>(is), {}};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("dnp_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

// Shared artifacts: a coarse torus mesh and its DN map.
const TempDir& workdir() {
  static TempDir d;
  static bool made = false;
  if (!made) {
    made = true;
    REQUIRE(run({"mesh-gen", "--genus", "1", "--resolution", "8", "-o", d / "torus.json"}).code == kOk);
    REQUIRE(run({"dn-gen", "--mesh", d / "torus.json", "-o", d / "torus_dn.json"}).code == kOk);
  }
  return d;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == kUsage);
  CHECK(run({"frobnicate"}).code == kUsage);
  CHECK(run({"mesh-gen", "--genus", "3"}).code == kUsage);
  CHECK(run({"mesh-gen", "--genus", "1", "--hole", "0.45"}).code == kUsage);
  CHECK(run({"spectrum"}).code == kUsage);
  CHECK(run({"dn-gen"}).code == kUsage);
  CHECK(run({"dn-gen", "--disk-analytic", "2"}).code == kUsage);
  CHECK(run({"reconstruct", "--dn", "/nonexistent.json"}).code == kUsage);
  CHECK(run({"reconstruct", "--dn", "x.json", "--tol", "-1"}).code == kUsage);
}

TEST_CASE("help exits with 0") {
  auto r = run({"--help"});
  CHECK(r.code == kOk);
  CHECK(r.out.find("reconstruct") != std::string::npos);
}

TEST_CASE("mesh-gen writes a loadable mesh") {
  const auto& d = workdir();
  auto j = read_json(d / "torus.json");
  CHECK(j.at("genus") == 1);
  auto m = mesh_from_json(j);
  CHECK(m.euler_characteristic() == -1);
}

TEST_CASE("mesh file validation") {
  const auto& d = workdir();
  auto j = read_json(d / "torus.json");
  j["triangles"][0][0] = 10000000;
  CHECK_THROWS_AS(mesh_from_json(j), IoError);
  auto k = read_json(d / "torus.json");
  k.erase("edge_lengths");
  CHECK_THROWS_AS(mesh_from_json(k), IoError);
}

TEST_CASE("disk DN: spectrum reports genus 0") {
  const auto& d = workdir();
  REQUIRE(run({"dn-gen", "--disk-analytic", "64", "-o", d / "disk.json"}).code == kOk);
  auto r = run({"spectrum", "--dn", d / "disk.json"});
  REQUIRE(r.code == kOk);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("genus") == 0);
  CHECK(j.at("mus").size() == 62);
  auto rc = run({"reconstruct", "--dn", d / "disk.json"});
  CHECK(rc.code == kOk);
  CHECK(nlohmann::json::parse(rc.out).at("genus") == 0);
}

TEST_CASE("torus: spectrum and reconstruction") {
  const auto& d = workdir();
  auto s = run({"spectrum", "--dn", d / "torus_dn.json"});
  REQUIRE(s.code == kOk);
  CHECK(nlohmann::json::parse(s.out).at("genus") == 1);

  auto r = run({"reconstruct", "--dn", d / "torus_dn.json", "-o", d / "periods.json", "--lattice-csv",
                d / "lattice.csv"});
  REQUIRE(r.code == kOk);
  auto j = read_json(d / "periods.json");
  CHECK(j.at("genus") == 1);
  CHECK(j.at("b_imag").size() == 4);
  CHECK(j.at("siegel_report").at("pass") == true);
  CHECK(j.at("canonical_basis").size() == 2);
  auto csv = slurp(d / "lattice.csv");
  CHECK(csv.rfind("alpha_1,beta_1,residual\n", 0) == 0);
}

TEST_CASE("config overrides and rejects unknown keys") {
  const auto& d = workdir();
  {
    std::ofstream os(d / "bad.json");
    os << R"({"delt": 0.1})";
  }
  auto r = run({"spectrum", "--dn", d / "torus_dn.json", "--config", d / "bad.json"});
  CHECK(r.code == kUsage);
  CHECK(r.err.find("delt") != std::string::npos);
  {
    std::ofstream os(d / "good.json");
    os << R"({"delta": 0.5, "lattice": {"growth": 1.5}})";
  }
  auto g = run({"spectrum", "--dn", d / "torus_dn.json", "--config", d / "good.json"});
  REQUIRE(g.code == kOk);
  auto j = nlohmann::json::parse(g.out);
  CHECK(j.at("delta") == 0.5);
  // --delta wins over the config file
  auto h = run({"spectrum", "--dn", d / "torus_dn.json", "--config", d / "good.json", "--delta", "0.05"});
  CHECK(nlohmann::json::parse(h.out).at("delta") == 0.05);

  PipelineConfig c;
  CHECK_THROWS_AS(apply_config(nlohmann::json::parse(R"({"lattice": {"sizes": 1}})"), c), UsageError);
  CHECK_THROWS_AS(apply_config(nlohmann::json::parse(R"({"delta": -1})"), c), UsageError);
  CHECK_THROWS_AS(apply_config(nlohmann::json::parse("[1]"), c), UsageError);
}

TEST_CASE("unsymmetric DN matrix is an invariant failure") {
  const auto& d = workdir();
  auto dn = load_dn(d / "torus_dn.json");
  dn.matrix(0, 1) += 1.0;
  save_dn(d / "skew.json", dn);
  auto r = run({"reconstruct", "--dn", d / "skew.json"});
  CHECK(r.code == kInvariant);
  CHECK(r.err.find("symmetric") != std::string::npos);
}

TEST_CASE("oracle comparison on the coarse torus") {
  const auto& d = workdir();
  auto r = run({"oracle-compare", "--mesh", d / "torus.json", "--dn", d / "torus_dn.json"});
  REQUIRE(r.code == kOk);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("boundary_genus") == 1);
  CHECK(j.at("pairing_is_standard") == true);
  CHECK(j.at("aux_gap_frobenius").get<double>() < 1e-2);
  // a tolerance below the observed gap turns into exit code 3
  auto tight = run({"oracle-compare", "--mesh", d / "torus.json", "--dn", d / "torus_dn.json", "--tol", "1e-9"});
  CHECK(tight.code == kInvariant);
}

TEST_CASE("noise sweep writes CSV") {
  const auto& d = workdir();
  auto r = run({"noise-sweep", "--dn", d / "torus_dn.json", "--epsilons", "1e-4", "--trials", "1", "--seed", "3",
                "-o", d / "sweep.csv"});
  REQUIRE(r.code == kOk);
  auto csv = slurp(d / "sweep.csv");
  CHECK(csv.find("epsilon,trial,seed") == 0);
  CHECK(csv.find(",ok\n") != std::string::npos);
  CHECK(run({"noise-sweep", "--dn", d / "torus_dn.json", "--model", "laplace"}).code == kUsage);
  CHECK(run({"noise-sweep", "--dn", d / "torus_dn.json", "--epsilons", "1e-3", "1e-4"}).code == kUsage);
}

TEST_CASE("installed binary") {
  const char* exe = std::getenv("DNP_CLI");
  if (!exe) {
    MESSAGE("DNP_CLI not set; skipping subprocess check");
    return;
  }
  std::string base = std::string("\"") + exe + "\"";
  CHECK(std::system((base + " --help > /dev/null").c_str()) == 0);
  int st = std::system((base + " spectrum > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(st) == kUsage);
}
