#include "gmf/cli.hpp"

#include "gmf/config.hpp"
#include "gmf/digest.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace gmf {

using nlohmann::json;

json read_config(const std::string& path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t k = 0; k < end; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (const auto p = msg.find("parse error"); p != std::string::npos)
      msg = msg.substr(p);
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }
}

void write_csv(const CsvTable& table, const std::string& path)
{
  table.write(path);
}

json RunManifest::to_json() const
{
  return { { "command_line", command_line },
           { "config_digest", config_digest },
           { "trajectory_digests", trajectory_digests },
           { "tool_version", tool_version },
           { "wall_time_seconds", wall_time_seconds },
           { "master_seed", master_seed },
           { "extra", extra } };
}

void RunManifest::write(const std::string& path) const
{
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw IoError("cannot open '" + path + "' for writing");
  f << to_json().dump(2) << "\n";
  if (!f)
    throw IoError("write failed: '" + path + "'");
}

Theta theta_from_json(const json& cfg, const TrajectorySet& traj)
{
  const ConfigView c(cfg);
  double g0 = 0.0, f_l2 = 0.0;
  if (c.has("system")) {
    const auto spec = spec_from_json(cfg.at("system"));
    if (spec.d != traj.d)
      throw ConfigError("theta system dimension does not match the trajectory");
    g0 = spec.graphon.g0;
    f_l2 = field_l2_norm(*spec.drift.F, spec.d);
  }
  g0 = c.number_or("g0", g0);
  f_l2 = c.number_or("f_l2", f_l2);
  if (!(g0 > 0.0))
    throw ConfigError("theta config needs 'g0' (or a 'system' to take it from)");

  ThetaOptions opt;
  if (c.has("grid")) {
    const auto gr = c.child("grid");
    auto count = [&](const char* key, std::size_t& v) {
      const auto x = gr.integer_or(key, static_cast<long long>(v));
      if (x < 2)
        throw ConfigError("config key 'grid." + std::string(key) + "' must be at least 2");
      v = static_cast<std::size_t>(x);
    };
    count("n_times", opt.n_times);
    count("n_u", opt.n_u);
    count("n_x", opt.n_x);
    count("n_w", opt.n_w);
    count("n_xi", opt.n_xi);
    opt.phi_amplitude = gr.number_or("phi_amplitude", opt.phi_amplitude);
    opt.phi_shape = gr.string_or("phi_shape", opt.phi_shape);
  }
  const bool kappa0_given = c.has("cutoffs") && c.child("cutoffs").has("kappa0");
  Theta theta = default_theta(traj.n, traj.grid.T, traj.d, g0, f_l2 > 0.0 || !kappa0_given ? f_l2 : 1.0, opt);
  if (c.has("bandwidths")) {
    const auto b = c.child("bandwidths");
    theta.h.h1 = b.number_or("h1", theta.h.h1);
    theta.h.h2 = b.number_or("h2", theta.h.h2);
    theta.h.h3 = b.number_or("h3", theta.h.h3);
  }
  if (c.has("cutoffs")) {
    const auto k = c.child("cutoffs");
    theta.cut.kappa0 = k.number_or("kappa0", theta.cut.kappa0);
    theta.cut.kappa1 = k.number_or("kappa1", theta.cut.kappa1);
    theta.cut.kappa2 = k.number_or("kappa2", theta.cut.kappa2);
    theta.cut.r = k.number_or("r", theta.cut.r);
    theta.cut.r_tilde = k.number_or("r_tilde", theta.cut.r_tilde);
  }
  if (c.has("kernels")) {
    const auto k = c.child("kernels");
    theta.kernels.H = kernel_by_name(k.string_or("H", "biweight"));
    theta.kernels.J = kernel_by_name(k.string_or("J", "biweight"));
    theta.kernels.k_factor = kernel_by_name(k.string_or("K", "biweight"));
  }
  theta.h.check();
  theta.cut.check();
  rebuild_grids(theta, traj.grid.T, traj.d, opt);
  if (f_l2 > 0.0)
    advise_kappa0(theta.cut, g0, f_l2);
  return theta;
}

namespace {

std::vector<double> parse_list(const std::string& text, const std::string& what)
{
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos)
      throw ConfigError(what + ": cannot parse '" + item + "' as a number");
    out.push_back(v);
  }
  if (out.empty())
    throw ConfigError(what + ": empty list");
  return out;
}

Bandwidths parse_bandwidths(const std::string& text)
{
  const auto v = parse_list(text, "--h");
  if (v.size() != 3)
    throw ConfigError("--h expects h1,h2,h3");
  Bandwidths h{ v[0], v[1], v[2] };
  h.check();
  return h;
}

std::string join_argv(int argc, const char* const* argv)
{
  std::string s;
  for (int k = 0; k < argc; ++k) {
    if (k)
      s += ' ';
    std::string a = argv[k];
    if (a.find_first_of(" \t\"'") != std::string::npos) {
      std::string q = "'";
      for (char ch : a)
        q += ch == '\'' ? std::string("'\\''") : std::string(1, ch);
      a = q + "'";
    }
    s += a;
  }
  return s;
}

std::vector<double> axis_from(const ConfigView& c, const char* key)
{
  const auto a = c.child(key);
  const auto count = a.integer("count");
  if (count < 1)
    throw ConfigError("config key '" + a.path() + ".count' must be at least 1");
  return uniform_nodes(a.number("from"), a.number("to"), static_cast<std::size_t>(count));
}

SystemSpec system_from_config(const json& cfg)
{
  return spec_from_json(cfg.contains("system") ? cfg.at("system") : cfg);
}

DriftPath parse_path(const std::string& s)
{
  if (s == "auto")
    return DriftPath::automatic;
  if (s == "reference")
    return DriftPath::reference;
  if (s == "accelerated")
    return DriftPath::accelerated;
  throw ConfigError("--path must be auto, reference or accelerated");
}

} // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  const auto started = std::chrono::steady_clock::now();
  CLI::App app{ "Graphon mean-field particle systems: simulation and non-parametric estimation" };
  app.name("gmf");
  app.set_version_flag("--version", std::string(GMF_VERSION));
  app.require_subcommand(1);

  RunManifest manifest;
  manifest.command_line = join_argv(argc, argv);
  auto finish_manifest = [&](const std::string& path) {
    if (path.empty())
      return;
    manifest.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    manifest.write(path);
  };

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate the particle system and write a trajectory file");
  std::string sim_config, sim_out, sim_manifest, sim_path = "auto";
  std::size_t sim_n = 0, sim_steps = 0;
  std::uint64_t sim_seed = 0;
  sim->add_option("--config", sim_config, "System config (JSON)")->required();
  sim->add_option("--n", sim_n, "Number of particles")->required();
  sim->add_option("--steps", sim_steps, "Number of time steps")->required();
  sim->add_option("--seed", sim_seed, "Random seed")->required();
  sim->add_option("--out", sim_out, "Trajectory output path")->required();
  sim->add_option("--path", sim_path, "Drift summation: auto, reference or accelerated");
  sim->add_option("--manifest", sim_manifest, "Write a run manifest here");

  // estimate
  auto* est = app.add_subcommand("estimate", "Point estimates of mu, pi and beta");
  est->set_help_flag("--help", "Print this help message and exit");
  std::string est_traj, est_h;
  std::vector<std::string> est_at;
  double est_kappa2 = 1e-3;
  est->add_option("--traj", est_traj, "Trajectory file")->required();
  est->add_option("--at", est_at, "Evaluation point t,u,x1[,x2...] (repeatable)")->required();
  est->add_option("--h", est_h, "Bandwidths h1,h2,h3")->required();
  est->add_option("--kappa2", est_kappa2, "Density floor for beta");

  // fields
  auto* fld = app.add_subcommand("fields", "mu, pi and beta on a tensor grid");
  fld->set_help_flag("--help", "Print this help message and exit");
  std::string fld_traj, fld_grid, fld_out, fld_h, fld_manifest;
  fld->add_option("--traj", fld_traj, "Trajectory file")->required();
  fld->add_option("--grid", fld_grid, "Grid config (JSON)")->required();
  fld->add_option("--out", fld_out, "Output CSV")->required();
  fld->add_option("--h", fld_h, "Bandwidths h1,h2,h3 (overrides the grid config)");
  fld->add_option("--manifest", fld_manifest, "Write a run manifest here");

  // graphon
  auto* gph = app.add_subcommand("graphon", "Graphon estimates at (u0, v0) pairs");
  std::string gph_traj, gph_pairs, gph_theta, gph_out, gph_manifest;
  gph->add_option("--traj", gph_traj, "Trajectory file")->required();
  gph->add_option("--pairs", gph_pairs, "CSV with columns u0,v0")->required();
  gph->add_option("--theta", gph_theta, "Estimator config (JSON)")->required();
  gph->add_option("--out", gph_out, "Output CSV")->required();
  gph->add_option("--manifest", gph_manifest, "Write a run manifest here");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run a reproducible experiment");
  std::string exp_name, exp_config, exp_out;
  exp->add_option("name", exp_name, "Experiment name")->required()->check(CLI::IsMember(experiment_names()));
  exp->add_option("--config", exp_config, "Experiment config (JSON)")->required();
  exp->add_option("--out", exp_out, "Output directory")->required();

  // validate
  auto* val = app.add_subcommand("validate", "Check a system config against the standing conditions");
  std::string val_config;
  std::size_t val_samples = 20000;
  double val_tol = 1e-9;
  std::uint64_t val_seed = 0;
  val->add_option("--config", val_config, "System config (JSON)")->required();
  val->add_option("--samples", val_samples, "Sample points per check");
  val->add_option("--tol", val_tol, "Tolerance");
  val->add_option("--seed", val_seed, "Sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  set_warning_sink([&err](const std::string& m) { err << "warning: " << m << "\n"; });
  struct Restore
  {
    ~Restore()
    {
      set_warning_sink([](const std::string& m) { std::cerr << "warning: " << m << "\n"; });
    }
  } restore;

  try {
    if (*sim) {
      const auto cfg = read_config(sim_config);
      const auto spec = system_from_config(cfg);
      if (sim_n < 1 || sim_steps < 1)
        throw DomainError("--n and --steps must be at least 1");
      SimulateOptions opts;
      opts.path = parse_path(sim_path);
      const auto traj = simulate(spec, sim_n, TimeGrid(spec.T, sim_steps), sim_seed, opts);
      save_trajectories(traj, sim_out);
      manifest.config_digest = file_sha256_hex(sim_config);
      manifest.trajectory_digests[sim_out] = file_sha256_hex(sim_out);
      manifest.master_seed = sim_seed;
      manifest.extra = { { "spec_digest", spec.digest() }, { "n", sim_n }, { "steps", sim_steps } };
      finish_manifest(sim_manifest);
      return 0;
    }
    if (*est) {
      const auto traj = load_trajectories(est_traj);
      const auto h = parse_bandwidths(est_h);
      std::vector<std::string> header{ "t", "u" };
      for (std::size_t c = 0; c < traj.d; ++c)
        header.push_back("x" + std::to_string(c + 1));
      header.push_back("mu_hat");
      for (std::size_t c = 0; c < traj.d; ++c)
        header.push_back("pi_hat" + std::to_string(c + 1));
      for (std::size_t c = 0; c < traj.d; ++c)
        header.push_back("beta_hat" + std::to_string(c + 1));
      CsvTable table(header);
      for (const auto& at : est_at) {
        const auto v = parse_list(at, "--at");
        if (v.size() != 2 + traj.d)
          throw ShapeError("--at expects t,u and " + std::to_string(traj.d) + " state coordinates");
        const std::span<const double> x(v.data() + 2, traj.d);
        std::vector<double> row(v);
        row.push_back(mu_hat(traj, {}, h, v[0], v[1], x));
        const auto p = pi_hat(traj, {}, h, v[0], v[1], x);
        const auto b = beta_hat(traj, {}, h, v[0], v[1], x, est_kappa2);
        row.insert(row.end(), p.begin(), p.end());
        row.insert(row.end(), b.begin(), b.end());
        table.add_row(row);
      }
      out << table.to_string();
      return 0;
    }
    if (*fld) {
      const auto traj = load_trajectories(fld_traj);
      const auto cfg = read_config(fld_grid);
      const ConfigView c(cfg);
      EvalGrid grid;
      grid.d = traj.d;
      grid.times = axis_from(c, "times");
      grid.us = axis_from(c, "us");
      grid.xs = axis_from(c, "xs");
      Bandwidths h;
      if (!fld_h.empty()) {
        h = parse_bandwidths(fld_h);
      } else {
        const auto b = c.child("bandwidths");
        h = { b.number("h1"), b.number("h2"), b.number("h3") };
      }
      Cutoffs cut;
      if (c.has("cutoffs")) {
        const auto k = c.child("cutoffs");
        cut.kappa2 = k.number_or("kappa2", cut.kappa2);
        cut.r = k.number_or("r", cut.r);
      }
      const auto f = fields_on_grid(traj, {}, h, grid, cut);
      std::vector<std::string> header{ "t", "u" };
      for (std::size_t k = 0; k < traj.d; ++k)
        header.push_back("x" + std::to_string(k + 1));
      header.push_back("mu");
      for (std::size_t k = 0; k < traj.d; ++k)
        header.push_back("pi" + std::to_string(k + 1));
      for (std::size_t k = 0; k < traj.d; ++k)
        header.push_back("beta" + std::to_string(k + 1));
      CsvTable table(header);
      std::vector<double> x(traj.d);
      for (std::size_t a = 0; a < grid.times.size(); ++a)
        for (std::size_t b = 0; b < grid.us.size(); ++b)
          for (std::size_t cc = 0; cc < grid.x_count(); ++cc) {
            grid.x_node(cc, x);
            const std::size_t node = f.node(a, b, cc);
            std::vector<double> row{ grid.times[a], grid.us[b] };
            row.insert(row.end(), x.begin(), x.end());
            row.push_back(f.mu[node]);
            for (std::size_t k = 0; k < traj.d; ++k)
              row.push_back(f.pi[node * traj.d + k]);
            for (std::size_t k = 0; k < traj.d; ++k)
              row.push_back(f.beta[node * traj.d + k]);
            table.add_row(row);
          }
      write_csv(table, fld_out);
      manifest.config_digest = file_sha256_hex(fld_grid);
      manifest.trajectory_digests[fld_traj] = file_sha256_hex(fld_traj);
      manifest.master_seed = traj.seed;
      finish_manifest(fld_manifest);
      return 0;
    }
    if (*gph) {
      const auto traj = load_trajectories(gph_traj);
      const auto theta = theta_from_json(read_config(gph_theta), traj);
      const auto pairs = CsvTable::read(gph_pairs);
      const std::size_t cu = pairs.column("u0");
      const std::size_t cv = pairs.column("v0");
      const GraphonEstimator estimator(traj, theta);
      CsvTable table({ "u0", "v0", "g_hat", "a_hat_num", "a_hat_den", "masked_fraction" });
      for (std::size_t r = 0; r < pairs.rows().size(); ++r) {
        const double u0 = pairs.number(r, cu), v0 = pairs.number(r, cv);
        if (!(u0 >= 0.0 && u0 <= 1.0 && v0 >= 0.0 && v0 <= 1.0))
          throw DomainError("pair (" + format_real(u0) + ", " + format_real(v0) + ") outside [0, 1]^2");
        const auto g = estimator.eval(u0, v0);
        const std::vector<double> row{ u0, v0, g.g_hat, g.a_num, g.a_den, g.masked_fraction };
        table.add_row(row);
      }
      write_csv(table, gph_out);
      manifest.config_digest = file_sha256_hex(gph_theta);
      manifest.trajectory_digests[gph_traj] = file_sha256_hex(gph_traj);
      manifest.master_seed = traj.seed;
      finish_manifest(gph_manifest);
      return 0;
    }
    if (*exp) {
      const auto cfg = read_config(exp_config);
      const auto report = run_experiment(exp_name, cfg);
      report.write(exp_out);
      manifest.config_digest = file_sha256_hex(exp_config);
      manifest.master_seed = static_cast<std::uint64_t>(cfg.value("master_seed", 1LL));
      manifest.extra = report.meta;
      manifest.extra["report_digest"] = file_sha256_hex(exp_out + "/report.csv");
      finish_manifest(exp_out + "/meta.json");
      out << report.slope_text();
      return 0;
    }
    if (*val) {
      const auto cfg = read_config(val_config);
      const auto spec = system_from_config(cfg);
      const auto report = validate_spec(spec, val_samples, val_tol, val_seed);
      out << report.to_text();
      if (!report.all_passed()) {
        err << "error: system violates the standing conditions\n";
        return 1;
      }
      return 0;
    }
  } catch (const UserError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
  err << app.help();
  return 1;
}

} // namespace gmf
