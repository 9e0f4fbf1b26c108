#pragma once

#include "gmf/kernels.hpp"
#include "gmf/simulator.hpp"

namespace gmf {

struct Cutoffs
{
  double kappa0 = 0.1;
  double kappa1 = 0.1;
  double kappa2 = 1e-3;
  double r = 3.0;
  double r_tilde = 50.0;

  void check() const;
};

//! Warns when kappa0 >= g0 * |F|_2.
void advise_kappa0(const Cutoffs& cut, double g0, double f_l2);

//! Uniform nodes: x nodes are the same axis in every coordinate.
struct EvalGrid
{
  std::vector<double> times;
  std::vector<double> us;
  std::vector<double> xs;
  std::size_t d = 1;

  std::size_t x_count() const;
  //! State point of flattened x node c (row-major over coordinates).
  void x_node(std::size_t c, std::span<double> out) const;
  void check() const;
};

//! count nodes from a to b inclusive.
std::vector<double> uniform_nodes(double a, double b, std::size_t count);

double mu_hat(const TrajectorySet& traj, const KernelTriple& kt, const Bandwidths& h, double t0, double u0,
              std::span<const double> x0);
std::vector<double> pi_hat(const TrajectorySet& traj, const KernelTriple& kt, const Bandwidths& h, double t0,
                           double u0, std::span<const double> x0);
std::vector<double> beta_hat(const TrajectorySet& traj, const KernelTriple& kt, const Bandwidths& h, double t0,
                             double u0, std::span<const double> x0, double kappa2);

//! mu and beta on every (t, u, x) node; pi is kept for diagnostics.
//! Layout: mu[(a * Nu + b) * Nx + c], pi/beta[((a * Nu + b) * Nx + c) * d + comp].
struct GridFields
{
  EvalGrid grid;
  std::vector<double> mu;
  std::vector<double> pi;
  std::vector<double> beta;

  std::size_t node(std::size_t a, std::size_t b, std::size_t c) const
  {
    return (a * grid.us.size() + b) * grid.x_count() + c;
  }
};

GridFields fields_on_grid(const TrajectorySet& traj, const KernelTriple& kt, const Bandwidths& h,
                          const EvalGrid& grid, const Cutoffs& cut);

} // namespace gmf
