#include "gmf/experiments.hpp"

#include "gmf/config.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace gmf {

using nlohmann::json;

namespace {

struct MeanSe
{
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(std::span<const double> v)
{
  MeanSe r;
  if (v.empty())
    return r;
  CompensatedSum s;
  for (double x : v)
    s.add(x);
  r.mean = s.value() / static_cast<double>(v.size());
  if (v.size() > 1) {
    CompensatedSum q;
    for (double x : v)
      q.add((x - r.mean) * (x - r.mean));
    const double var = q.value() / static_cast<double>(v.size() - 1);
    r.se = std::sqrt(var / static_cast<double>(v.size()));
  }
  return r;
}

double sample_variance(std::span<const double> v)
{
  const auto m = mean_se(v);
  return m.se * m.se * static_cast<double>(v.size());
}

void check_n_list(const std::vector<std::size_t>& ns, std::size_t seeds)
{
  if (ns.empty())
    throw ConfigError("experiment needs a nonempty n list");
  for (std::size_t k = 0; k < ns.size(); ++k) {
    if (ns[k] == 0)
      throw ConfigError("experiment n values must be positive");
    if (k > 0 && ns[k] <= ns[k - 1])
      throw ConfigError("experiment n list must be strictly increasing");
  }
  if (seeds < 1)
    throw ConfigError("experiment needs seeds >= 1");
}

//! Runs fn over all (n, replicate) cells; rows come back in (n, replicate) order.
std::vector<ExperimentRow> run_cells(const std::vector<std::size_t>& ns, std::size_t seeds, std::uint64_t master,
                                     const std::function<std::vector<double>(std::size_t, std::uint64_t)>& fn)
{
  std::vector<ExperimentRow> rows(ns.size() * seeds);
  for (std::size_t a = 0; a < ns.size(); ++a)
    for (std::size_t s = 0; s < seeds; ++s) {
      auto& row = rows[a * seeds + s];
      row.n = ns[a];
      row.replicate = s;
      row.seed = cell_seed(master, ns[a], s);
    }
  parallel_for(rows.size(), [&](std::size_t c) { rows[c].metrics = fn(rows[c].n, rows[c].seed); });
  return rows;
}

std::vector<double> metric_column(const std::vector<ExperimentRow>& rows, std::size_t n, std::size_t m)
{
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.n == n)
      out.push_back(r.metrics[m]);
  return out;
}

void fit_aggregates(ExperimentReport& rep)
{
  std::vector<double> x, y;
  for (const auto& a : rep.aggregates) {
    x.push_back(a.x);
    y.push_back(a.mean);
  }
  rep.slope = fit_loglog(x, y);
}

//! Consecutive means may not increase by more than two standard errors of the difference.
void add_decreasing_check(ExperimentReport& rep, const std::string& name)
{
  if (rep.aggregates.size() < 2)
    return;
  bool ok = true;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < rep.aggregates.size(); ++k) {
    const auto& p = rep.aggregates[k - 1];
    const auto& q = rep.aggregates[k];
    const double slack = 2.0 * std::hypot(p.stderr_, q.stderr_);
    const double excess = q.mean - p.mean - slack;
    worst = std::max(worst, excess);
    if (excess > 0.0)
      ok = false;
  }
  rep.checks.push_back({ name, ok, worst, "max over consecutive n of mean[k] - mean[k-1] - 2 se_diff" });
}

json schedule_json(const Schedule& s)
{
  return { { "h1", { { "c", s.c1 }, { "a", s.a1 } } },
           { "h2", { { "c", s.c2 }, { "a", s.a2 } } },
           { "h3", { { "c", s.c3 }, { "a", s.a3 } } } };
}

double degree(const GraphonSpec& g, double u)
{
  if (g.constant)
    return *g.constant;
  // Simpson over v in [0, 1]
  const std::size_t panels = 4096;
  const double step = 1.0 / panels;
  CompensatedSum s;
  for (std::size_t k = 0; k <= panels; ++k) {
    const double w = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    s.add(w * g.g(u - k * step));
  }
  return s.value() * step / 3.0;
}

//! int_0^1 J_h(u0 - v) dv: composite 5-point Gauss-Legendre on the clipped support,
//! exact for polynomial kernels up to degree 9.
double j_mass(const KernelTriple& kt, double h, double u0)
{
  const double lo = std::max(-1.0, (u0 - 1.0) / h);
  const double hi = std::min(1.0, u0 / h);
  if (!(hi > lo))
    return 0.0;
  static constexpr double node[5] = { -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                      0.9061798459386640 };
  static constexpr double weight[5] = { 0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                        0.4786286704993665, 0.2369268850561891 };
  const std::size_t panels = 16;
  const double step = (hi - lo) / panels;
  CompensatedSum s;
  for (std::size_t k = 0; k < panels; ++k) {
    const double mid = lo + (static_cast<double>(k) + 0.5) * step;
    for (int q = 0; q < 5; ++q)
      s.add(weight[q] * kt.J(mid + 0.5 * step * node[q]));
  }
  return 0.5 * step * s.value();
}

void require_ou(const SystemSpec& spec)
{
  if (!spec.drift.F->is_zero())
    throw ConfigError("closed-form oracle needs F = 0");
  if (!spec.drift.V->is_zero() && !spec.drift.V->linear_slope())
    throw ConfigError("closed-form oracle needs a linear V");
  if (!spec.diffusion.scalar)
    throw ConfigError("closed-form oracle needs a scalar diffusion");
  if (!spec.initial.gaussian && !spec.initial.point)
    throw ConfigError("closed-form oracle needs a Gaussian or point initial law");
}

void require_point_mass(const SystemSpec& spec)
{
  if (!spec.drift.F->is_zero() || !spec.drift.V->is_zero())
    throw ConfigError("point-mass oracle needs F = 0 and V = 0");
  if (!spec.diffusion.scalar || *spec.diffusion.scalar != 0.0)
    throw ConfigError("point-mass oracle needs zero diffusion");
  if (!spec.initial.point)
    throw ConfigError("point-mass oracle needs a point initial law");
}

ExperimentReport density_core(const DensityConfig& cfg, const std::string& name)
{
  check_n_list(cfg.n_list, cfg.seeds);
  check_structure(cfg.system);
  if (cfg.point.x.size() != cfg.system.d)
    throw ConfigError("evaluation point x must have d coordinates");
  if (cfg.steps < 1)
    throw ConfigError("experiment needs steps >= 1");
  const TimeGrid grid(cfg.system.T, cfg.steps);
  const double t0 = grid.t(grid.snap(cfg.point.t));

  std::function<double(std::size_t)> reference;
  switch (cfg.oracle) {
  case DensityOracle::ou: {
    require_ou(cfg.system);
    const double v = ou_density(cfg.system, t0, cfg.point.u, cfg.point.x);
    reference = [v](std::size_t) { return v; };
    break;
  }
  case DensityOracle::point_mass: {
    require_point_mass(cfg.system);
    const std::vector<double> c(cfg.system.d, *cfg.system.initial.point);
    std::vector<double> diff(cfg.system.d);
    for (std::size_t k = 0; k < diff.size(); ++k)
      diff[k] = cfg.point.x[k] - c[k];
    reference = [&cfg, diff](std::size_t n) {
      const auto h = cfg.schedule.at(n);
      return dilate_K(cfg.kernels, h.h3, diff) * j_mass(cfg.kernels, h.h2, cfg.point.u);
    };
    break;
  }
  case DensityOracle::self: {
    const std::size_t n_ref = 4 * cfg.n_list.back();
    const TimeGrid fine(cfg.system.T, 4 * cfg.steps);
    const auto traj = simulate(cfg.system, n_ref, fine, cell_seed(cfg.master_seed, n_ref, 0));
    const double v = mu_hat(traj, cfg.kernels, cfg.schedule.at(n_ref), t0, cfg.point.u, cfg.point.x);
    reference = [v](std::size_t) { return v; };
    break;
  }
  }

  ExperimentReport rep;
  rep.name = name;
  rep.metric_names = { "sq_error", "mu_hat", "reference" };
  rep.rows = run_cells(cfg.n_list, cfg.seeds, cfg.master_seed, [&](std::size_t n, std::uint64_t seed) {
    const auto traj = simulate(cfg.system, n, grid, seed);
    const double m = mu_hat(traj, cfg.kernels, cfg.schedule.at(n), t0, cfg.point.u, cfg.point.x);
    const double ref = reference(n);
    return std::vector<double>{ (m - ref) * (m - ref), m, ref };
  });
  for (std::size_t n : cfg.n_list) {
    const auto col = metric_column(rep.rows, n, 0);
    const auto ms = mean_se(col);
    rep.aggregates.push_back({ n, static_cast<double>(n), ms.mean, ms.se, col.size() });
  }
  fit_aggregates(rep);
  rep.meta = { { "experiment", name },
               { "system", cfg.system.describe() },
               { "n", cfg.n_list },
               { "seeds", cfg.seeds },
               { "master_seed", cfg.master_seed },
               { "steps", cfg.steps },
               { "point", { { "t", t0 }, { "u", cfg.point.u }, { "x", cfg.point.x } } },
               { "schedule", schedule_json(cfg.schedule) } };
  return rep;
}

std::string oracle_name(DensityOracle o)
{
  switch (o) {
  case DensityOracle::ou:
    return "ou";
  case DensityOracle::point_mass:
    return "point_mass";
  case DensityOracle::self:
    return "self";
  }
  return "?";
}

// ---- degeneration oracles ----

bool law_constant_on_blocks(const SystemSpec& spec, std::size_t m)
{
  const auto& d = spec.initial.description;
  const auto family = d.value("family", std::string());
  if (family == "point")
    return true;
  if (family == "gaussian")
    return d.value("mean_slope", 0.0) == 0.0;
  if (family == "block_gaussian") {
    const auto means = d.at("means").get<std::vector<double>>();
    const auto sds = d.at("sds").get<std::vector<double>>();
    if (m % means.size() == 0)
      return true;
    for (std::size_t k = 1; k < means.size(); ++k)
      if (means[k] != means[0] || sds[k] != sds[0])
        return false;
    return true;
  }
  return false;
}

bool blocks_differ(const SystemSpec& spec)
{
  const auto& d = spec.initial.description;
  if (d.value("family", std::string()) != "block_gaussian")
    return false;
  const auto means = d.at("means").get<std::vector<double>>();
  const auto sds = d.at("sds").get<std::vector<double>>();
  for (std::size_t k = 1; k < means.size(); ++k)
    if (means[k] != means[0] || sds[k] != sds[0])
      return true;
  return false;
}

bool graphon_periodic_on(const GraphonSpec& g, std::size_t m)
{
  if (g.constant)
    return true;
  const auto family = g.description.value("family", std::string());
  if (family != "periodic")
    return false;
  const auto blocks = g.description.at("blocks").get<long long>();
  return blocks >= 1 && static_cast<std::size_t>(blocks) % m == 0;
}

double grid_l1(std::span<const double> a, std::span<const double> b, double cell)
{
  CompensatedSum s;
  for (std::size_t k = 0; k < a.size(); ++k)
    s.add(std::abs(a[k] - b[k]));
  return s.value() * cell;
}

ExperimentReport block_oracle(const DegenerationConfig& cfg, std::size_t m, const std::string& name)
{
  const auto& spec = cfg.system;
  check_structure(spec);
  if (cfg.n == 0)
    throw ConfigError("degeneration oracle needs n >= 1");
  if (m == 0)
    throw ConfigError("block count must be at least 1");
  const std::size_t per = cfg.nodes_per_block;
  if (per < 2 && m == 1)
    throw ConfigError("homogeneous oracle needs at least 2 index nodes");
  if (per < 1)
    throw ConfigError("nodes_per_block must be at least 1");
  const std::size_t slots = m * per;
  if (cfg.seeds < slots)
    throw ConfigError("degeneration oracle needs seeds >= blocks * nodes_per_block (" + std::to_string(slots) + ")");
  if (cfg.x_nodes < 2 || !(cfg.x_extent > 0.0))
    throw ConfigError("degeneration oracle needs x_nodes >= 2 and x_extent > 0");
  cfg.h.check();
  const double width = 1.0 / static_cast<double>(m);
  if (cfg.h.h2 > width / (2.0 * static_cast<double>(per)) * (1.0 + 1e-12))
    throw ConfigError("h2 too large: index windows of neighbouring nodes must not overlap (need h2 <= "
                      + format_real(width / (2.0 * static_cast<double>(per))) + ")");
  if (!cfg.negative_control) {
    if (!graphon_periodic_on(spec.graphon, m))
      throw ConfigError("graphon premise violated: g must be constant or periodic with a block count divisible by "
                        + std::to_string(m));
    if (!law_constant_on_blocks(spec, m))
      throw ConfigError("initial law premise violated: law must be constant on each of the " + std::to_string(m)
                        + " index blocks");
    if (m > 1 && cfg.n % m != 0)
      throw ConfigError("n must be a multiple of the block count");
  }

  std::vector<double> us(slots);
  std::vector<std::size_t> block(slots);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < per; ++k) {
      us[j * per + k] = (static_cast<double>(j) + (static_cast<double>(k) + 0.5) / static_cast<double>(per)) * width;
      block[j * per + k] = j;
    }
  const std::size_t mid = per / 2;

  EvalGrid eg;
  eg.d = spec.d;
  eg.xs = uniform_nodes(-cfg.x_extent, cfg.x_extent, cfg.x_nodes);
  eg.us = us;
  eg.times = { 0.0 };
  const std::size_t nx = eg.x_count();
  const double cell = std::pow(eg.xs[1] - eg.xs[0], static_cast<double>(spec.d));
  const TimeGrid grid(spec.T, cfg.steps);
  const double t0 = grid.t(grid.snap(cfg.t0));

  // curves[s][a * nx + c]
  std::vector<std::vector<double>> curves(cfg.seeds);
  std::vector<std::uint64_t> seeds(cfg.seeds);
  for (std::size_t s = 0; s < cfg.seeds; ++s)
    seeds[s] = cell_seed(cfg.master_seed, cfg.n, s);
  parallel_for(cfg.seeds, [&](std::size_t s) {
    const auto traj = simulate(spec, cfg.n, grid, seeds[s]);
    auto& out = curves[s];
    out.assign(slots * nx, 0.0);
    std::vector<double> x(spec.d);
    for (std::size_t a = 0; a < slots; ++a)
      for (std::size_t c = 0; c < nx; ++c) {
        eg.x_node(c, x);
        out[a * nx + c] = mu_hat(traj, cfg.kernels, cfg.h, t0, us[a], x);
      }
  });
  auto curve = [&](std::size_t s, std::size_t a) { return std::span<const double>(curves[s].data() + a * nx, nx); };

  const bool across = m > 1;
  ExperimentReport rep;
  rep.name = name;
  rep.metric_names = { "within", "baseline" };
  if (across)
    rep.metric_names.push_back("across");
  for (std::size_t s = 0; s < cfg.seeds; ++s) {
    double within = 0.0, base = 0.0, acr = 0.0;
    for (std::size_t a = 0; a < slots; ++a)
      for (std::size_t b = a + 1; b < slots; ++b) {
        if (block[a] == block[b]) {
          within = std::max(within, grid_l1(curve(s, a), curve(s, b), cell));
          // baseline: the same slot structure filled with distinct seeds at the block's reference node
          const std::size_t ref = block[a] * per + mid;
          base = std::max(base, grid_l1(curve((s + a) % cfg.seeds, ref), curve((s + b) % cfg.seeds, ref), cell));
        } else {
          acr = std::max(acr, grid_l1(curve(s, a), curve(s, b), cell));
        }
      }
    ExperimentRow row{ cfg.n, s, seeds[s], { within, base } };
    if (across)
      row.metrics.push_back(acr);
    rep.rows.push_back(std::move(row));
  }

  const auto w = mean_se(metric_column(rep.rows, cfg.n, 0));
  const auto b = mean_se(metric_column(rep.rows, cfg.n, 1));
  rep.aggregates.push_back({ cfg.n, static_cast<double>(cfg.n), w.mean, w.se, cfg.seeds });
  const double ratio = w.mean / b.mean;
  rep.stats["within_mean"] = w.mean;
  rep.stats["within_se"] = w.se;
  rep.stats["baseline_mean"] = b.mean;
  rep.stats["baseline_se"] = b.se;
  rep.stats["within_ratio"] = ratio;
  rep.checks.push_back({ "within_ratio<=1.5", ratio <= 1.5, ratio, "mean within-seed discrepancy / seed-noise baseline" });
  if (cfg.negative_control && m == 1)
    rep.checks.push_back({ "negative_control_ratio>=3", ratio >= 3.0, ratio, "power check on a mis-specified premise" });
  if (across) {
    const auto a = mean_se(metric_column(rep.rows, cfg.n, 2));
    rep.stats["across_mean"] = a.mean;
    rep.stats["across_se"] = a.se;
    rep.stats["across_ratio"] = a.mean / b.mean;
    if (blocks_differ(spec))
      rep.checks.push_back(
        { "across_ratio>=3", a.mean / b.mean >= 3.0, a.mean / b.mean, "blocks start from different laws" });
  }
  rep.meta = { { "experiment", name },
               { "system", spec.describe() },
               { "n", json::array({ cfg.n }) },
               { "seeds", cfg.seeds },
               { "master_seed", cfg.master_seed },
               { "steps", cfg.steps },
               { "t0", t0 },
               { "blocks", m },
               { "index_nodes", us },
               { "bandwidths", { cfg.h.h1, cfg.h.h2, cfg.h.h3 } },
               { "negative_control", cfg.negative_control } };
  return rep;
}

// ---- config parsing ----

std::vector<std::size_t> n_list_from(const ConfigView& c, const char* key)
{
  std::vector<std::size_t> out;
  for (double v : c.numbers(key)) {
    if (!(v >= 1.0) || v != std::floor(v))
      throw ConfigError("config key '" + std::string(key) + "' must hold positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::size_t count_from(const ConfigView& c, const char* key, std::size_t fallback)
{
  const auto v = c.integer_or(key, static_cast<long long>(fallback));
  if (v < 0)
    throw ConfigError("config key '" + std::string(key) + "' must be nonnegative");
  return static_cast<std::size_t>(v);
}

KernelTriple kernels_from(const ConfigView& c)
{
  KernelTriple kt;
  if (!c.has("kernels"))
    return kt;
  const auto k = c.child("kernels");
  kt.H = kernel_by_name(k.string_or("H", "biweight"));
  kt.J = kernel_by_name(k.string_or("J", "biweight"));
  kt.k_factor = kernel_by_name(k.string_or("K", "biweight"));
  return kt;
}

Schedule schedule_from(const ConfigView& c, std::size_t d)
{
  if (!c.has("schedule"))
    return {};
  const auto& raw = c.raw().at("schedule");
  if (raw.is_string()) {
    const auto s = raw.get<std::string>();
    if (s == "default")
      return {};
    throw ConfigError("unknown schedule '" + s + "'");
  }
  const auto sc = c.child("schedule");
  if (sc.has("minimax_s"))
    return Schedule::minimax(sc.number("minimax_s"), d);
  Schedule s;
  auto part = [&](const char* key, double& cc, double& aa) {
    if (!sc.has(key))
      return;
    const auto p = sc.child(key);
    cc = p.number_or("c", 1.0);
    aa = p.number_or("a", 0.2);
  };
  part("h1", s.c1, s.a1);
  part("h2", s.c2, s.a2);
  part("h3", s.c3, s.a3);
  return s;
}

DensityConfig density_from(const json& j)
{
  const ConfigView c(j);
  if (!c.has("system"))
    throw ConfigError("missing required config key 'system'");
  DensityConfig cfg;
  cfg.system = spec_from_json(j.at("system"));
  cfg.n_list = n_list_from(c, "n");
  cfg.seeds = count_from(c, "seeds", 10);
  cfg.master_seed = static_cast<std::uint64_t>(c.integer_or("master_seed", 1));
  cfg.steps = count_from(c, "steps", 100);
  if (c.has("point")) {
    const auto p = c.child("point");
    cfg.point.t = p.number_or("t", cfg.system.T);
    cfg.point.u = p.number_or("u", 0.5);
    cfg.point.x = p.has("x") ? p.numbers("x") : std::vector<double>(cfg.system.d, 0.0);
  } else {
    cfg.point.t = cfg.system.T;
    cfg.point.x.assign(cfg.system.d, 0.0);
  }
  cfg.schedule = schedule_from(c, cfg.system.d);
  const auto oracle = c.string_or("oracle", "ou");
  if (oracle == "ou")
    cfg.oracle = DensityOracle::ou;
  else if (oracle == "point_mass")
    cfg.oracle = DensityOracle::point_mass;
  else if (oracle == "self")
    cfg.oracle = DensityOracle::self;
  else
    throw ConfigError("unknown oracle '" + oracle + "' (ou, point_mass, self)");
  cfg.kernels = kernels_from(c);
  return cfg;
}

DegenerationConfig degeneration_from(const json& j)
{
  const ConfigView c(j);
  if (!c.has("system"))
    throw ConfigError("missing required config key 'system'");
  DegenerationConfig cfg;
  cfg.system = spec_from_json(j.at("system"));
  const auto n = c.integer("n");
  if (n < 1)
    throw ConfigError("config key 'n' must be at least 1");
  cfg.n = static_cast<std::size_t>(n);
  cfg.seeds = count_from(c, "seeds", cfg.seeds);
  cfg.master_seed = static_cast<std::uint64_t>(c.integer_or("master_seed", 1));
  cfg.steps = count_from(c, "steps", cfg.steps);
  cfg.t0 = c.number_or("t0", 0.5 * cfg.system.T);
  if (c.has("bandwidths")) {
    const auto b = c.child("bandwidths");
    cfg.h = { b.number("h1"), b.number("h2"), b.number("h3") };
  }
  cfg.x_extent = c.number_or("x_extent", cfg.x_extent);
  cfg.x_nodes = count_from(c, "x_nodes", cfg.x_nodes);
  cfg.nodes_per_block = count_from(c, "nodes_per_block", cfg.nodes_per_block);
  cfg.negative_control = c.boolean_or("negative_control", false);
  cfg.kernels = kernels_from(c);
  return cfg;
}

ThetaOptions theta_options_from(const ConfigView& c)
{
  ThetaOptions o;
  if (!c.has("theta"))
    return o;
  const auto t = c.child("theta");
  o.n_times = count_from(t, "n_times", o.n_times);
  o.n_u = count_from(t, "n_u", o.n_u);
  o.n_x = count_from(t, "n_x", o.n_x);
  o.n_w = count_from(t, "n_w", o.n_w);
  o.n_xi = count_from(t, "n_xi", o.n_xi);
  o.phi_amplitude = t.number_or("phi_amplitude", o.phi_amplitude);
  o.phi_shape = t.string_or("phi_shape", o.phi_shape);
  return o;
}

} // namespace

std::optional<SlopeFit> fit_loglog(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size())
    throw ShapeError("fit_loglog: x and y differ in length");
  const std::size_t k = x.size();
  if (k < 2)
    return std::nullopt;
  std::vector<double> lx(k), ly(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw DomainError("fit_loglog needs positive values");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0))
    throw DomainError("fit_loglog needs distinct x values");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = ly[i] - (f.intercept + f.slope * lx[i]);
    f.residuals.push_back(r);
    sse += r * r;
  }
  if (k == 2) {
    f.half_width = std::numeric_limits<double>::infinity();
  } else {
    const double dof = static_cast<double>(k - 2);
    const double se = std::sqrt(sse / dof / sxx);
    const boost::math::students_t dist(dof);
    f.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
  }
  return f;
}

bool ExperimentReport::passed() const
{
  for (const auto& c : checks)
    if (!c.passed)
      return false;
  return true;
}

CsvTable ExperimentReport::table() const
{
  std::vector<std::string> header{ "n", "replicate", "seed" };
  header.insert(header.end(), metric_names.begin(), metric_names.end());
  CsvTable t(header);
  for (const auto& r : rows) {
    std::vector<std::string> cells{ std::to_string(r.n), std::to_string(r.replicate), std::to_string(r.seed) };
    for (double v : r.metrics)
      cells.push_back(format_real(v));
    t.add_row(std::move(cells));
  }
  return t;
}

std::string ExperimentReport::slope_text() const
{
  std::ostringstream o;
  o << "experiment: " << name << "\n";
  o << "metric: " << (metric_names.empty() ? std::string("-") : metric_names.front()) << "\n";
  o << "aggregates (n, x, mean, stderr, count):\n";
  for (const auto& a : aggregates)
    o << "  " << a.n << " " << format_real(a.x) << " " << format_real(a.mean) << " " << format_real(a.stderr_) << " "
      << a.count << "\n";
  if (slope) {
    o << "slope: " << format_real(slope->slope) << "\n";
    o << "intercept: " << format_real(slope->intercept) << "\n";
    o << "ci95_half_width: " << format_real(slope->half_width) << "\n";
    o << "residuals:";
    for (double r : slope->residuals)
      o << " " << format_real(r);
    o << "\n";
  } else {
    o << "slope: absent\n";
  }
  if (target_slope)
    o << "target_slope: " << format_real(*target_slope) << "\n";
  for (const auto& [k, v] : stats)
    o << k << ": " << format_real(v) << "\n";
  for (const auto& c : checks)
    o << "check " << c.name << ": " << (c.passed ? "pass" : "FAIL") << " (" << format_real(c.value) << ") "
      << c.detail << "\n";
  o << "status: " << (checks.empty() ? "report-only" : (passed() ? "pass" : "fail")) << "\n";
  return o.str();
}

void ExperimentReport::write(const std::string& dir) const
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  table().write((std::filesystem::path(dir) / "report.csv").string());
  const auto path = (std::filesystem::path(dir) / "slope.txt").string();
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw IoError("cannot open '" + path + "' for writing");
  f << slope_text();
  if (!f)
    throw IoError("write failed: '" + path + "'");
}

Bandwidths Schedule::at(std::size_t n) const
{
  const double nn = static_cast<double>(n);
  return { c1 * std::pow(nn, -a1), c2 * std::pow(nn, -a2), c3 * std::pow(nn, -a3) };
}

Schedule Schedule::constant(double h1, double h2, double h3)
{
  return { h1, 0.0, h2, 0.0, h3, 0.0 };
}

Schedule Schedule::minimax(double s, std::size_t d)
{
  if (!(s > 0.0))
    throw ConfigError("smoothness s must be positive");
  const double den = static_cast<double>(d) + 3.0 * s;
  Schedule out;
  out.a2 = s / den;
  out.a3 = 1.0 / den;
  out.a1 = out.a2;
  return out;
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t n, std::size_t replicate)
{
  return mix_seed(mix_seed(master, n), replicate);
}

double ou_density(const SystemSpec& spec, double t, double u, std::span<const double> x)
{
  require_ou(spec);
  if (x.size() != spec.d)
    throw ShapeError("ou_density: x must have d coordinates");
  const double a = spec.drift.V->is_zero() ? 0.0 : *spec.drift.V->linear_slope();
  const double lambda = a * degree(spec.graphon, u);
  const double sigma = *spec.diffusion.scalar;
  double m0 = 0.0, s0 = 0.0;
  if (spec.initial.point) {
    m0 = *spec.initial.point;
  } else {
    const auto g = spec.initial.gaussian(u);
    m0 = g.mean;
    s0 = g.sd;
  }
  double mean = m0, var = s0 * s0 + sigma * sigma * t;
  if (std::abs(lambda * t) > 1e-12) {
    const double e = std::exp(-lambda * t);
    mean = m0 * e;
    var = s0 * s0 * e * e + sigma * sigma * (1.0 - e * e) / (2.0 * lambda);
  }
  if (!(var > 0.0))
    throw DomainError("ou_density: degenerate marginal (zero variance)");
  double p = 1.0;
  for (double xc : x)
    p *= std::exp(-0.5 * (xc - mean) * (xc - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
  return p;
}

ExperimentReport run_density_convergence(const DensityConfig& cfg)
{
  auto rep = density_core(cfg, "density_convergence");
  rep.meta["oracle"] = oracle_name(cfg.oracle);
  add_decreasing_check(rep, "mse_decreasing");
  return rep;
}

ExperimentReport run_minimax_rate(const MinimaxConfig& cfg)
{
  DensityConfig base = cfg.base;
  if (!cfg.schedule_off)
    base.schedule = Schedule::minimax(cfg.s, base.system.d);
  auto rep = density_core(base, cfg.schedule_off ? "minimax_rate_control" : "minimax_rate");
  rep.meta["oracle"] = oracle_name(base.oracle);
  rep.meta["s"] = cfg.s;
  rep.meta["schedule_off"] = cfg.schedule_off;
  const double target = -2.0 * cfg.s / (static_cast<double>(base.system.d) + 3.0 * cfg.s);
  rep.target_slope = target;
  if (rep.slope) {
    rep.stats["slope_minus_target"] = rep.slope->slope - target;
    rep.stats["shallower_than_target"] = rep.slope->slope > target ? 1.0 : 0.0;
  }
  if (cfg.report_only)
    return rep;
  if (!rep.slope) {
    rep.checks.push_back({ "slope_within_30pct", false, 0.0, "needs at least two n values" });
    return rep;
  }
  const double dev = std::abs(rep.slope->slope - target);
  rep.checks.push_back({ "slope_within_30pct", dev <= 0.3 * std::abs(target), rep.slope->slope,
                         "|slope - target| <= 0.3 |target|" });
  if (cfg.schedule_off)
    rep.checks.push_back({ "control_shallower", rep.slope->slope > target, rep.slope->slope,
                           "constant bandwidths flatten the decay" });
  return rep;
}

ExperimentReport run_variance_scaling(const VarianceConfig& cfg)
{
  if (cfg.base.seeds < 2)
    throw ConfigError("variance scaling needs seeds >= 2");
  auto rep = density_core(cfg.base, "variance_scaling");
  rep.meta["oracle"] = oracle_name(cfg.base.oracle);
  rep.aggregates.clear();
  const double d = static_cast<double>(cfg.base.system.d);
  for (std::size_t n : cfg.base.n_list) {
    const auto col = metric_column(rep.rows, n, 1);
    const double var = sample_variance(col);
    const auto h = cfg.base.schedule.at(n);
    const double x = static_cast<double>(n) * h.h2 * std::pow(h.h3, d);
    rep.aggregates.push_back(
      { n, x, var, var * std::sqrt(2.0 / static_cast<double>(col.size() - 1)), col.size() });
  }
  fit_aggregates(rep);
  rep.target_slope = -1.0;
  if (rep.slope)
    rep.checks.push_back({ "slope_within_0.3", std::abs(rep.slope->slope + 1.0) <= 0.3, rep.slope->slope,
                           "slope of log Var against log(n h2 h3^d) in -1 +- 0.3" });
  return rep;
}

ExperimentReport run_homogeneous_oracle(const DegenerationConfig& cfg)
{
  return block_oracle(cfg, 1, "homogeneous_oracle");
}

ExperimentReport run_finite_graph_oracle(const FiniteGraphConfig& cfg)
{
  return block_oracle(cfg.base, cfg.blocks, cfg.blocks == 1 ? "homogeneous_oracle" : "finite_graph_oracle");
}

ExperimentReport run_graphon_recovery(const GraphonRecoveryConfig& cfg)
{
  check_n_list(cfg.n_list, cfg.seeds);
  const auto& spec = cfg.system;
  check_structure(spec);
  if (spec.graphon.description.value("family", std::string()).empty())
    throw ConfigError("graphon recovery needs a built-in graphon family");
  if (cfg.pairs.empty())
    throw ConfigError("graphon recovery needs at least one (u0, v0) pair");
  for (const auto& [u0, v0] : cfg.pairs)
    if (!(u0 >= 0.0 && u0 <= 1.0 && v0 >= 0.0 && v0 <= 1.0))
      throw ConfigError("graphon pairs must lie in [0, 1]^2");
  const double f_l2 = field_l2_norm(*spec.drift.F, spec.d);
  const TimeGrid grid(spec.T, cfg.steps);

  ExperimentReport rep;
  rep.name = "graphon_recovery";
  for (std::size_t k = 0; k < cfg.pairs.size(); ++k)
    rep.metric_names.push_back("error_" + std::to_string(k));
  for (std::size_t k = 0; k < cfg.pairs.size(); ++k)
    rep.metric_names.push_back("g_hat_" + std::to_string(k));
  rep.metric_names.push_back("a_hat_0");
  rep.metric_names.push_back("masked_fraction");

  rep.rows = run_cells(cfg.n_list, cfg.seeds, cfg.master_seed, [&](std::size_t n, std::uint64_t seed) {
    const auto traj = simulate(spec, n, grid, seed);
    const auto theta = default_theta(n, spec.T, spec.d, spec.graphon.g0, f_l2, cfg.theta_options);
    const GraphonEstimator est(traj, theta);
    std::vector<double> err, gh;
    GHatResult last;
    for (const auto& [u0, v0] : cfg.pairs) {
      last = est.eval(u0, v0);
      gh.push_back(last.g_hat);
      err.push_back(std::abs(last.g_hat - spec.graphon.g(u0 - v0)));
    }
    err.insert(err.end(), gh.begin(), gh.end());
    err.push_back(last.a_den);
    err.push_back(last.masked_fraction);
    return err;
  });
  for (std::size_t n : cfg.n_list) {
    const auto col = metric_column(rep.rows, n, 0);
    const auto ms = mean_se(col);
    rep.aggregates.push_back({ n, static_cast<double>(n), ms.mean, ms.se, col.size() });
    for (std::size_t k = 0; k < cfg.pairs.size(); ++k) {
      const auto e = mean_se(metric_column(rep.rows, n, k));
      rep.stats["n" + std::to_string(n) + ".error_" + std::to_string(k) + ".mean"] = e.mean;
      rep.stats["n" + std::to_string(n) + ".error_" + std::to_string(k) + ".se"] = e.se;
    }
  }
  if (cfg.n_list.size() >= 2) {
    const auto& first = rep.aggregates.front();
    const auto& last = rep.aggregates.back();
    const double slack = 2.0 * std::hypot(first.stderr_, last.stderr_);
    rep.checks.push_back({ "error_not_increasing", last.mean <= first.mean + slack, last.mean - first.mean,
                           "mean error at largest n <= mean error at smallest n + 2 se_diff" });
  }
  if (cfg.max_mean_error)
    rep.checks.push_back({ "mean_error<=" + format_real(*cfg.max_mean_error),
                           rep.aggregates.back().mean <= *cfg.max_mean_error, rep.aggregates.back().mean,
                           "mean error of the first pair at the largest n" });
  json pairs = json::array();
  for (const auto& [u0, v0] : cfg.pairs)
    pairs.push_back({ u0, v0 });
  rep.meta = { { "experiment", rep.name },
               { "system", spec.describe() },
               { "n", cfg.n_list },
               { "seeds", cfg.seeds },
               { "master_seed", cfg.master_seed },
               { "steps", cfg.steps },
               { "pairs", pairs },
               { "theta",
                 { { "n_times", cfg.theta_options.n_times },
                   { "n_u", cfg.theta_options.n_u },
                   { "n_x", cfg.theta_options.n_x },
                   { "n_w", cfg.theta_options.n_w },
                   { "n_xi", cfg.theta_options.n_xi },
                   { "phi_amplitude", cfg.theta_options.phi_amplitude },
                   { "phi_shape", cfg.theta_options.phi_shape } } } };
  return rep;
}

const std::vector<std::string>& experiment_names()
{
  static const std::vector<std::string> names{ "density_convergence", "minimax_rate", "variance_scaling",
                                               "homogeneous_oracle",  "finite_graph_oracle", "graphon_recovery" };
  return names;
}

ExperimentReport run_experiment(const std::string& name, const json& j)
{
  if (!j.is_object())
    throw ConfigError("experiment config must be an object");
  const ConfigView c(j);
  if (name == "density_convergence")
    return run_density_convergence(density_from(j));
  if (name == "minimax_rate") {
    MinimaxConfig cfg;
    cfg.base = density_from(j);
    cfg.s = c.number_or("s", 0.5);
    cfg.schedule_off = c.boolean_or("schedule_off", false);
    cfg.report_only = c.boolean_or("report_only", false);
    return run_minimax_rate(cfg);
  }
  if (name == "variance_scaling")
    return run_variance_scaling({ density_from(j) });
  if (name == "homogeneous_oracle")
    return run_homogeneous_oracle(degeneration_from(j));
  if (name == "finite_graph_oracle") {
    FiniteGraphConfig cfg;
    cfg.base = degeneration_from(j);
    const auto m = c.integer_or("blocks", 2);
    if (m < 1)
      throw ConfigError("config key 'blocks' must be at least 1");
    cfg.blocks = static_cast<std::size_t>(m);
    return run_finite_graph_oracle(cfg);
  }
  if (name == "graphon_recovery") {
    if (!c.has("system"))
      throw ConfigError("missing required config key 'system'");
    GraphonRecoveryConfig cfg;
    cfg.system = spec_from_json(j.at("system"));
    cfg.n_list = n_list_from(c, "n");
    cfg.seeds = count_from(c, "seeds", cfg.seeds);
    cfg.master_seed = static_cast<std::uint64_t>(c.integer_or("master_seed", 1));
    cfg.steps = count_from(c, "steps", cfg.steps);
    if (c.has("pairs")) {
      cfg.pairs.clear();
      for (const auto& p : j.at("pairs")) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
          throw ConfigError("config key 'pairs' must hold [u0, v0] number pairs");
        cfg.pairs.emplace_back(p[0].get<double>(), p[1].get<double>());
      }
    }
    cfg.theta_options = theta_options_from(c);
    if (c.has("max_mean_error"))
      cfg.max_mean_error = c.number("max_mean_error");
    return run_graphon_recovery(cfg);
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

} // namespace gmf
