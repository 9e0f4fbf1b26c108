#pragma once

#include "gmf/csv.hpp"
#include "gmf/graphon.hpp"

#include <map>
#include <optional>
#include <string>

namespace gmf {

//! OLS fit of log y on log x.
struct SlopeFit
{
  double slope = 0.0;
  double intercept = 0.0;
  //! 95% confidence half-width (Student t); infinite with two points.
  double half_width = 0.0;
  std::vector<double> residuals;
};

std::optional<SlopeFit> fit_loglog(std::span<const double> x, std::span<const double> y);

struct ExperimentCheck
{
  std::string name;
  bool passed = false;
  double value = 0.0;
  std::string detail;
};

struct NAggregate
{
  std::size_t n = 0;
  double x = 0.0; //!< abscissa used for the slope fit
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

struct ExperimentRow
{
  std::size_t n = 0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  std::vector<double> metrics;
};

struct ExperimentReport
{
  std::string name;
  std::vector<std::string> metric_names;
  std::vector<ExperimentRow> rows;
  //! Aggregates of metric 0 per n, in n order.
  std::vector<NAggregate> aggregates;
  std::optional<SlopeFit> slope;
  std::optional<double> target_slope;
  std::vector<ExperimentCheck> checks;
  std::map<std::string, double> stats;
  nlohmann::json meta;

  bool passed() const;
  CsvTable table() const;
  std::string slope_text() const;
  //! report.csv and slope.txt in dir.
  void write(const std::string& dir) const;
};

//! Bandwidths h_k = c_k n^{-a_k}.
struct Schedule
{
  double c1 = 1.0, a1 = 0.2;
  double c2 = 1.0, a2 = 0.2;
  double c3 = 1.0, a3 = 0.2;

  Bandwidths at(std::size_t n) const;
  static Schedule constant(double h1, double h2, double h3);
  static Schedule minimax(double s, std::size_t d);
};

struct EvalPoint
{
  double t = 1.0;
  double u = 0.5;
  std::vector<double> x{ 0.0 };
};

enum class DensityOracle
{
  ou,         //!< closed-form Gaussian marginals of a zero-interaction linear system
  point_mass, //!< frozen point-mass system; the reference is the kernel-smoothed point mass
  self,       //!< high-resolution self-simulation (4x n, 4x finer dt)
};

struct DensityConfig
{
  SystemSpec system;
  std::vector<std::size_t> n_list;
  std::size_t seeds = 10;
  std::uint64_t master_seed = 1;
  std::size_t steps = 100;
  EvalPoint point;
  Schedule schedule;
  DensityOracle oracle = DensityOracle::ou;
  KernelTriple kernels;
};

//! Squared error of mu_hat at one point against the oracle, per (n, seed).
ExperimentReport run_density_convergence(const DensityConfig& cfg);

struct MinimaxConfig
{
  DensityConfig base;
  double s = 0.5;
  //! Use base.schedule instead of the rate-optimal one (control experiment).
  bool schedule_off = false;
  //! Report without pass/fail.
  bool report_only = false;
};

ExperimentReport run_minimax_rate(const MinimaxConfig& cfg);

struct VarianceConfig
{
  DensityConfig base;
};

//! Seed variance of mu_hat against n h2 h3^d.
ExperimentReport run_variance_scaling(const VarianceConfig& cfg);

//! Closed-form density of the zero-interaction linear system at (t, u, x).
double ou_density(const SystemSpec& spec, double t, double u, std::span<const double> x);

struct DegenerationConfig
{
  SystemSpec system;
  std::size_t n = 2000;
  std::size_t seeds = 24;
  std::uint64_t master_seed = 1;
  std::size_t steps = 100;
  double t0 = 0.5;
  Bandwidths h{ 0.2, 0.07, 0.25 };
  double x_extent = 3.0;
  std::size_t x_nodes = 121;
  //! Index nodes per block, placed inside each block away from its edges.
  std::size_t nodes_per_block = 3;
  //! Skip the premise checks (negative controls).
  bool negative_control = false;
  KernelTriple kernels;
};

ExperimentReport run_homogeneous_oracle(const DegenerationConfig& cfg);

struct FiniteGraphConfig
{
  DegenerationConfig base;
  std::size_t blocks = 2;
};

ExperimentReport run_finite_graph_oracle(const FiniteGraphConfig& cfg);

struct GraphonRecoveryConfig
{
  SystemSpec system;
  std::vector<std::size_t> n_list;
  std::size_t seeds = 10;
  std::uint64_t master_seed = 1;
  std::size_t steps = 200;
  std::vector<std::pair<double, double>> pairs{ { 0.6, 0.3 } };
  ThetaOptions theta_options;
  //! Pass threshold on the mean error of the first pair at the largest n.
  std::optional<double> max_mean_error;
};

ExperimentReport run_graphon_recovery(const GraphonRecoveryConfig& cfg);

//! Seed for cell (n, replicate).
std::uint64_t cell_seed(std::uint64_t master, std::size_t n, std::size_t replicate);

//! Names accepted by run_experiment.
const std::vector<std::string>& experiment_names();
//! Builds the config for the named experiment from a config tree and runs it.
ExperimentReport run_experiment(const std::string& name, const nlohmann::json& cfg);

} // namespace gmf
