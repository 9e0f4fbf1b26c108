#include "doctest.h"

#include "gmf/cli.hpp"
#include "gmf/digest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace gmf;
namespace fs = std::filesystem;

namespace {

struct Run
{
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args)
{
  args.insert(args.begin(), "gmf");
  std::vector<const char*> argv;
  for (const auto& a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p)
{
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text)
{
  std::ofstream f(p, std::ios::binary);
  f << text;
}

const char* system_text = R"({
  "system": {
    "d": 1, "T": 1.0,
    "drift": { "F": { "family": "truncated_linear", "strength": 1.0, "radius": 3.0 },
               "V": { "family": "truncated_linear", "strength": 1.0, "radius": 10.0 } },
    "graphon": { "family": "constant", "g0": 0.8 },
    "diffusion": { "family": "scalar", "sigma": 1.0 },
    "initial": { "family": "gaussian", "mean": 2.0, "sd": 0.7 }
  }
})";

struct TempDir
{
  fs::path path;
  TempDir()
  {
    path = fs::temp_directory_path() / ("gmf_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("cli: help, version and usage errors")
{
  CHECK(run({ "--help" }).code == 0);
  const auto v = run({ "--version" });
  CHECK(v.code == 0);
  CHECK(v.out.find(GMF_VERSION) != std::string::npos);
  CHECK(run({}).code == 1);
  CHECK(run({ "frobnicate" }).code == 1);
  const auto bad = run({ "simulate", "--bogus" });
  CHECK(bad.code == 1);
  CHECK(bad.err.find("error:") == 0);
  CHECK(run({ "experiment", "nope", "--config", "x", "--out", "y" }).code == 1);
  CHECK(run({ "simulate", "--config", "/nonexistent/cfg.json", "--n", "3", "--steps", "2", "--seed", "1", "--out",
              "/tmp/x.gmft" })
          .code == 1);
}

TEST_CASE("cli: validate exits by the validation outcome")
{
  TempDir dir;
  spit(dir / "good.json", system_text);
  CHECK(run({ "validate", "--config", dir / "good.json", "--samples", "500" }).code == 0);
  std::string bad = system_text;
  bad.replace(bad.find("\"g0\": 0.8"), 9, "\"g0\": 1.5");
  spit(dir / "bad.json", bad);
  const auto r = run({ "validate", "--config", dir / "bad.json", "--samples", "500" });
  CHECK(r.code == 1);
  spit(dir / "broken.json", "{\n  \"system\": [1,\n}");
  const auto b = run({ "validate", "--config", dir / "broken.json" });
  CHECK(b.code == 1);
  CHECK(b.err.find("broken.json:3:") != std::string::npos);
}

TEST_CASE("cli: simulate, estimate, fields and graphon end to end")
{
  TempDir dir;
  spit(dir / "sys.json", system_text);
  const auto sim = run({ "simulate", "--config", dir / "sys.json", "--n", "120", "--steps", "60", "--seed", "7",
                         "--out", dir / "a.gmft", "--manifest", dir / "a.meta.json" });
  REQUIRE(sim.code == 0);
  const auto man = nlohmann::json::parse(slurp(dir / "a.meta.json"));
  CHECK(man.at("trajectory_digests").at(dir / "a.gmft") == file_sha256_hex(dir / "a.gmft"));
  CHECK(man.at("config_digest") == file_sha256_hex(dir / "sys.json"));
  CHECK(man.at("master_seed") == 7);
  CHECK(man.at("tool_version") == GMF_VERSION);

  // rerun gives the same bytes
  REQUIRE(run({ "simulate", "--config", dir / "sys.json", "--n", "120", "--steps", "60", "--seed", "7", "--out",
                dir / "b.gmft", "--path", "reference" })
            .code == 0);
  CHECK(slurp(dir / "a.gmft").size() == slurp(dir / "b.gmft").size());
  const auto ta = load_trajectories(dir / "a.gmft"), tb = load_trajectories(dir / "b.gmft");
  double worst = 0.0;
  for (std::size_t k = 0; k < ta.positions.size(); ++k)
    worst = std::max(worst, std::abs(ta.positions[k] - tb.positions[k]));
  CHECK(worst < 1e-10);

  const auto est = run({ "estimate", "--traj", dir / "a.gmft", "--at", "0.5,0.5,2.0", "--at", "0.5,0.25,1.5", "--h",
                         "0.2,0.3,0.5" });
  REQUIRE(est.code == 0);
  const auto t = CsvTable::parse(est.out);
  CHECK(t.header() == std::vector<std::string>{ "t", "u", "x1", "mu_hat", "pi_hat1", "beta_hat1" });
  REQUIRE(t.rows().size() == 2);
  const double x = 2.0;
  CHECK(t.number(0, 3) == mu_hat(ta, {}, { 0.2, 0.3, 0.5 }, 0.5, 0.5, std::span(&x, 1)));
  // pi at t = 1 is outside the support of H
  CHECK(run({ "estimate", "--traj", dir / "a.gmft", "--at", "1,0.25,1.5", "--h", "0.2,0.3,0.5" }).code == 1);
  CHECK(run({ "estimate", "--traj", dir / "a.gmft", "--at", "0.5,0.25", "--h", "0.2,0.3,0.5" }).code == 1);

  spit(dir / "grid.json", R"({ "times": { "from": 0.3, "to": 0.7, "count": 3 },
    "us": { "from": 0, "to": 1, "count": 4 }, "xs": { "from": -1, "to": 4, "count": 6 },
    "bandwidths": { "h1": 0.2, "h2": 0.3, "h3": 0.5 }, "cutoffs": { "r": 3.0 } })");
  REQUIRE(run({ "fields", "--traj", dir / "a.gmft", "--grid", dir / "grid.json", "--out", dir / "f.csv", "--manifest",
                dir / "f.meta.json" })
            .code == 0);
  const auto f = CsvTable::read(dir / "f.csv");
  CHECK(f.rows().size() == 3 * 4 * 6);
  CHECK(f.header().front() == "t");
  CHECK(f.number(5, f.column("mu")) == 0.0);
  const auto fm = nlohmann::json::parse(slurp(dir / "f.meta.json"));
  CHECK(fm.at("trajectory_digests").at(dir / "a.gmft") == file_sha256_hex(dir / "a.gmft"));
  const std::string first = slurp(dir / "f.csv");
  REQUIRE(run({ "fields", "--traj", dir / "a.gmft", "--grid", dir / "grid.json", "--out", dir / "f.csv" }).code == 0);
  CHECK(slurp(dir / "f.csv") == first);

  spit(dir / "pairs.csv", "u0,v0\n0.6,0.3\n0.5,0.5\n");
  std::string theta = system_text;
  theta.insert(theta.rfind('}'), R"(, "grid": { "phi_amplitude": 15, "n_w": 51, "n_xi": 21 })");
  spit(dir / "theta.json", theta);
  const auto g = run({ "graphon", "--traj", dir / "a.gmft", "--pairs", dir / "pairs.csv", "--theta",
                       dir / "theta.json", "--out", dir / "g.csv" });
  REQUIRE(g.code == 0);
  const auto gt = CsvTable::read(dir / "g.csv");
  CHECK(gt.header() == std::vector<std::string>{ "u0", "v0", "g_hat", "a_hat_num", "a_hat_den", "masked_fraction" });
  REQUIRE(gt.rows().size() == 2);
  CHECK(gt.number(0, 2) >= 0.0);
  if (gt.number(1, 4) >= 0.25 * 0.8 * field_l2_norm(*spec_from_json(nlohmann::json::parse(system_text).at("system")).drift.F, 1))
    CHECK(gt.number(1, 2) == doctest::Approx(0.8));
}

TEST_CASE("cli: corrupt trajectory is a user error")
{
  TempDir dir;
  spit(dir / "junk.gmft", "not a trajectory");
  const auto r = run({ "estimate", "--traj", dir / "junk.gmft", "--at", "0.5,0.5,0", "--h", "0.2,0.2,0.2" });
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("cli: experiment writes its report files")
{
  TempDir dir;
  spit(dir / "exp.json", R"({
    "system": { "d": 1, "T": 1.0,
      "drift": { "F": { "family": "zero" }, "V": { "family": "zero" } },
      "graphon": { "family": "constant", "g0": 1.0 },
      "diffusion": { "family": "scalar", "sigma": 0.0 },
      "initial": { "family": "point", "value": 0.3 } },
    "n": [50, 200], "seeds": 2, "steps": 5,
    "point": { "t": 1.0, "u": 0.1, "x": [0.5] },
    "schedule": { "h2": { "c": 0.3, "a": 0.2 } },
    "oracle": "point_mass" })");
  const auto r = run({ "experiment", "density_convergence", "--config", dir / "exp.json", "--out", dir / "out" });
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "out/report.csv"));
  CHECK(fs::exists(dir / "out/slope.txt"));
  CHECK(fs::exists(dir / "out/meta.json"));
  CHECK(r.out == slurp(dir / "out/slope.txt"));
  const auto meta = nlohmann::json::parse(slurp(dir / "out/meta.json"));
  CHECK(meta.at("config_digest") == file_sha256_hex(dir / "exp.json"));
  CHECK(meta.at("extra").at("report_digest") == file_sha256_hex(dir / "out/report.csv"));
}
