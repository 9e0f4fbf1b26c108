#include "doctest.h"

#include "gmf/config.hpp"
#include "gmf/experiments.hpp"

#include <filesystem>

using namespace gmf;
using nlohmann::json;

namespace {

json system_json(json F, json V, json g, double sigma, json init)
{
  return { { "d", 1 },
           { "T", 1.0 },
           { "drift", { { "F", std::move(F) }, { "V", std::move(V) } } },
           { "graphon", std::move(g) },
           { "diffusion", { { "family", "scalar" }, { "sigma", sigma } } },
           { "initial", std::move(init) } };
}

json linear(double k, double radius = 10.0)
{
  return { { "family", "truncated_linear" }, { "strength", k }, { "radius", radius } };
}

const json zero = { { "family", "zero" } };

json point_mass_config()
{
  return { { "system", system_json(zero, zero, { { "family", "constant" }, { "g0", 1.0 } }, 0.0,
                                   { { "family", "point" }, { "value", 0.3 } }) },
           { "n", { 50, 200, 800 } },
           { "seeds", 3 },
           { "steps", 10 },
           { "point", { { "t", 1.0 }, { "u", 0.1 }, { "x", { 0.5 } } } },
           { "schedule", { { "h1", { { "c", 0.2 }, { "a", 0.0 } } },
                           { "h2", { { "c", 0.3 }, { "a", 0.2 } } },
                           { "h3", { { "c", 1.0 }, { "a", 0.2 } } } } },
           { "oracle", "point_mass" } };
}

json ou_config()
{
  return { { "system", system_json(zero, linear(1.0), { { "family", "constant" }, { "g0", 1.0 } }, 1.0,
                                   { { "family", "gaussian" }, { "mean", 0.0 }, { "sd", std::sqrt(0.5) } }) },
           { "n", { 250, 1000, 4000 } },
           { "seeds", 10 },
           { "master_seed", 9 },
           { "steps", 50 } };
}

json homogeneous_config(double slope)
{
  json init = { { "family", "gaussian" }, { "mean", 0.0 }, { "sd", 1.0 } };
  if (slope != 0.0)
    init["mean_slope"] = slope;
  return { { "system", system_json(linear(1.0), linear(0.5), { { "family", "constant" }, { "g0", 0.8 } }, 1.0, init) },
           { "n", 800 },
           { "seeds", 8 },
           { "master_seed", 3 },
           { "steps", 40 },
           { "bandwidths", { { "h1", 0.2 }, { "h2", 0.12 }, { "h3", 0.4 } } },
           { "x_extent", 4.0 },
           { "x_nodes", 81 },
           { "nodes_per_block", 4 } };
}

//! int_a^b (15/16)(1 - t^2)^2 dt
double biweight_integral(double a, double b)
{
  const auto P = [](double t) { return 15.0 / 16.0 * (t - 2.0 * t * t * t / 3.0 + t * t * t * t * t / 5.0); };
  return P(b) - P(a);
}

} // namespace

TEST_CASE("fit_loglog")
{
  const std::vector<double> x{ 1, 2, 4, 8 };
  std::vector<double> y;
  for (double v : x)
    y.push_back(3.0 * std::pow(v, -0.8));
  const auto f = fit_loglog(x, y);
  REQUIRE(f);
  CHECK(f->slope == doctest::Approx(-0.8).epsilon(1e-13));
  CHECK(f->intercept == doctest::Approx(std::log(3.0)).epsilon(1e-13));
  CHECK(f->half_width < 1e-10);
  const std::vector<double> one{ 2.0 };
  CHECK_FALSE(fit_loglog(one, one));
  const std::vector<double> two{ 1.0, 2.0 };
  CHECK(std::isinf(fit_loglog(two, two)->half_width));
  const std::vector<double> bad{ 1.0, -2.0 };
  CHECK_THROWS_AS(fit_loglog(two, bad), DomainError);
}

TEST_CASE("cell seeds are distinct and stable")
{
  CHECK(cell_seed(1, 100, 0) == cell_seed(1, 100, 0));
  CHECK(cell_seed(1, 100, 0) != cell_seed(1, 100, 1));
  CHECK(cell_seed(1, 100, 0) != cell_seed(1, 200, 0));
  CHECK(cell_seed(1, 100, 0) != cell_seed(2, 100, 0));
}

TEST_CASE("point-mass density run equals the squared kernel bias")
{
  const auto rep = run_experiment("density_convergence", point_mass_config());
  REQUIRE(rep.rows.size() == 9);
  for (const auto& row : rep.rows) {
    const double n = static_cast<double>(row.n);
    const double h2 = 0.3 * std::pow(n, -0.2), h3 = std::pow(n, -0.2);
    const double t = (0.5 - 0.3) / h3;
    const double k = std::abs(t) < 1 ? 15.0 / 16.0 * (1 - t * t) * (1 - t * t) / h3 : 0.0;
    double riemann = 0.0;
    for (std::size_t i = 1; i <= row.n; ++i) {
      const double s = (0.1 - static_cast<double>(i) / n) / h2;
      if (std::abs(s) < 1)
        riemann += 15.0 / 16.0 * (1 - s * s) * (1 - s * s) / h2;
    }
    riemann /= n;
    const double mass = biweight_integral(std::max(-1.0, (0.1 - 1.0) / h2), std::min(1.0, 0.1 / h2));
    const double bias = k * (riemann - mass);
    CHECK(row.metrics[1] == doctest::Approx(k * riemann).epsilon(1e-12));
    CHECK(row.metrics[2] == doctest::Approx(k * mass).epsilon(1e-12));
    CHECK(row.metrics[0] == doctest::Approx(bias * bias).epsilon(1e-9));
  }
  // frozen system: replicates agree
  CHECK(rep.rows[0].metrics == rep.rows[1].metrics);
}

TEST_CASE("experiment reports are reproducible and written to disk")
{
  const auto a = run_experiment("density_convergence", point_mass_config());
  const auto b = run_experiment("density_convergence", point_mass_config());
  CHECK(a.table().to_string() == b.table().to_string());
  CHECK(a.slope_text() == b.slope_text());
  const auto dir = std::filesystem::temp_directory_path() / "gmf_test_report";
  std::filesystem::remove_all(dir);
  a.write(dir.string());
  CHECK(std::filesystem::exists(dir / "report.csv"));
  CHECK(std::filesystem::exists(dir / "slope.txt"));
  const auto back = CsvTable::read((dir / "report.csv").string());
  CHECK(back.to_string() == a.table().to_string());
  std::filesystem::remove_all(dir);
}

TEST_CASE("experiment config errors")
{
  auto cfg = point_mass_config();
  cfg["n"] = { 0, 10 };
  CHECK_THROWS_AS(run_experiment("density_convergence", cfg), ConfigError);
  cfg["n"] = { 100, 50 };
  CHECK_THROWS_AS(run_experiment("density_convergence", cfg), ConfigError);
  cfg = point_mass_config();
  cfg["oracle"] = "ou";
  CHECK_THROWS_AS(run_experiment("density_convergence", cfg), DomainError);
  cfg = ou_config();
  cfg["system"]["drift"]["F"] = linear(1.0);
  CHECK_THROWS_AS(run_experiment("density_convergence", cfg), ConfigError);
  cfg = point_mass_config();
  cfg["system"]["diffusion"]["sigma"] = 0.5;
  CHECK_THROWS_AS(run_experiment("density_convergence", cfg), ConfigError);
  CHECK_THROWS_AS(run_experiment("no_such", point_mass_config()), ConfigError);
  CHECK_THROWS_AS(run_experiment("density_convergence", json::array()), ConfigError);

  auto h = homogeneous_config(1.0);
  CHECK_THROWS_AS(run_experiment("homogeneous_oracle", h), ConfigError);
  h = homogeneous_config(0.0);
  h["bandwidths"]["h2"] = 0.2;
  CHECK_THROWS_AS(run_experiment("homogeneous_oracle", h), ConfigError);
  h = homogeneous_config(0.0);
  h["n"] = 0;
  CHECK_THROWS_AS(run_experiment("homogeneous_oracle", h), ConfigError);
  h = homogeneous_config(0.0);
  h["seeds"] = 3;
  CHECK_THROWS_AS(run_experiment("homogeneous_oracle", h), ConfigError);
  h = homogeneous_config(0.0);
  h["system"]["graphon"] = { { "family", "periodic" }, { "g0", 0.9 }, { "depth", 0.5 }, { "blocks", 3 } };
  h["blocks"] = 2;
  h["bandwidths"]["h2"] = 0.06;
  CHECK_THROWS_AS(run_experiment("finite_graph_oracle", h), ConfigError);
  h["system"]["graphon"]["blocks"] = 2;
  h["n"] = 801;
  CHECK_THROWS_AS(run_experiment("finite_graph_oracle", h), ConfigError);
}

TEST_CASE("homogeneous oracle, its negative control, and the one-block finite graph")
{
  const auto hom = run_experiment("homogeneous_oracle", homogeneous_config(0.0));
  CHECK(hom.passed());
  CHECK(hom.stats.at("within_ratio") <= 1.5);

  auto one = homogeneous_config(0.0);
  one["blocks"] = 1;
  const auto fin = run_experiment("finite_graph_oracle", one);
  CHECK(fin.stats == hom.stats);
  CHECK(fin.table().to_string() == hom.table().to_string());

  auto neg = homogeneous_config(5.0);
  neg["negative_control"] = true;
  const auto bad = run_experiment("homogeneous_oracle", neg);
  MESSAGE("negative control ratio " << bad.stats.at("within_ratio"));
  CHECK_FALSE(bad.passed());
  bool saw_power = false;
  for (const auto& c : bad.checks) {
    if (c.name == "within_ratio<=1.5")
      CHECK_FALSE(c.passed);
    if (c.name == "negative_control_ratio>=3") {
      saw_power = true;
      CHECK(c.passed);
    }
  }
  CHECK(saw_power);
}

TEST_CASE("two-block oracle sees the block structure")
{
  auto cfg = homogeneous_config(0.0);
  cfg["system"]["graphon"] = { { "family", "periodic" }, { "g0", 0.9 }, { "depth", 0.5 }, { "blocks", 2 } };
  cfg["system"]["initial"] = { { "family", "block_gaussian" }, { "means", { -1.0, 1.0 } }, { "sds", { 0.6, 0.6 } } };
  cfg["blocks"] = 2;
  cfg["nodes_per_block"] = 3;
  cfg["bandwidths"]["h2"] = 0.08;
  cfg["n"] = 1200;
  const auto rep = run_experiment("finite_graph_oracle", cfg);
  CHECK(rep.metric_names.size() == 3);
  CHECK(rep.stats.at("across_ratio") >= 3.0);
  CHECK(rep.stats.at("within_ratio") <= 1.5);
}

TEST_CASE("small OU density run decreases in n")
{
  const auto rep = run_experiment("density_convergence", ou_config());
  REQUIRE(rep.aggregates.size() == 3);
  CHECK(rep.passed());
  CHECK(rep.aggregates[2].mean < rep.aggregates[0].mean);
  const double x0 = 0.0;
  CHECK(rep.rows[0].metrics[2] == doctest::Approx(std::exp(-x0) / std::sqrt(3.14159265358979323846)).epsilon(1e-12));
}

TEST_CASE("minimax schedule and report-only mode")
{
  const auto s = Schedule::minimax(1.0, 1);
  CHECK(s.a2 == doctest::Approx(0.25));
  CHECK(s.a3 == doctest::Approx(0.25));
  CHECK(s.a1 == s.a2);
  const auto h = s.at(10000);
  CHECK(h.h2 == doctest::Approx(0.1));
  CHECK_THROWS_AS(Schedule::minimax(0.0, 1), ConfigError);

  auto cfg = ou_config();
  cfg["n"] = { 100, 400 };
  cfg["seeds"] = 3;
  cfg["s"] = 1.0;
  cfg["report_only"] = true;
  const auto rep = run_experiment("minimax_rate", cfg);
  CHECK(rep.checks.empty());
  REQUIRE(rep.target_slope);
  CHECK(*rep.target_slope == doctest::Approx(-0.5));
}

TEST_CASE("graphon recovery: identical indices")
{
  const json sys = system_json(linear(1.0, 3.0), linear(1.0), { { "family", "constant" }, { "g0", 0.8 } }, 1.0,
                               { { "family", "gaussian" }, { "mean", 2.0 }, { "sd", 0.7 } });
  json cfg = { { "system", sys },
               { "n", { 200, 1000 } },
               { "seeds", 2 },
               { "steps", 200 },
               { "pairs", { { 0.4, 0.4 } } },
               { "theta", { { "phi_amplitude", 15.0 } } } };
  const auto rep = run_experiment("graphon_recovery", cfg);
  REQUIRE(rep.metric_names == std::vector<std::string>{ "error_0", "g_hat_0", "a_hat_0", "masked_fraction" });
  const auto spec = spec_from_json(sys);
  const double kappa0 = 0.25 * 0.8 * field_l2_norm(*spec.drift.F, 1);
  for (const auto& row : rep.rows) {
    const double a0 = row.metrics[2];
    // Ghat(u, u) = g0 once A(0) clears the floor, g0 A(0) / kappa0 below it
    const double want = a0 >= kappa0 ? 0.8 : 0.8 * a0 / kappa0;
    CHECK(row.metrics[1] == doctest::Approx(want).epsilon(1e-14));
    CHECK(row.metrics[0] == doctest::Approx(std::abs(want - 0.8)).epsilon(1e-14));
  }
  cfg["pairs"] = { { 0.4, 1.4 } };
  CHECK_THROWS_AS(run_experiment("graphon_recovery", cfg), ConfigError);
}
