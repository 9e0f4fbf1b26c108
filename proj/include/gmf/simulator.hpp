#pragma once

#include "gmf/model.hpp"

#include <string>
#include <vector>

namespace gmf {

struct TimeGrid
{
  double T = 1.0;
  std::size_t steps = 1;

  TimeGrid() = default;
  TimeGrid(double horizon, std::size_t m);

  double dt() const { return T / static_cast<double>(steps); }
  double t(std::size_t k) const { return T * static_cast<double>(k) / static_cast<double>(steps); }
  //! Nearest grid index to t; throws DomainError outside [0, T].
  std::size_t snap(double t) const;
};

//! Particle paths on a uniform grid. positions is (M+1) x n x d row-major.
struct TrajectorySet
{
  std::size_t n = 0;
  std::size_t d = 1;
  TimeGrid grid;
  std::vector<double> positions;
  std::uint64_t seed = 0;
  //! Hex digest of the generating SystemSpec (kept in run manifests, not in the file).
  std::string spec_digest;

  std::span<const double> at(std::size_t k) const { return { positions.data() + k * n * d, n * d }; }
  std::span<double> at(std::size_t k) { return { positions.data() + k * n * d, n * d }; }
  const double* particle(std::size_t k, std::size_t i) const { return positions.data() + (k * n + i) * d; }
  //! Index u_i = i/n of the zero-based particle i (so i/n with i = 1..n).
  double index(std::size_t i) const { return static_cast<double>(i + 1) / static_cast<double>(n); }
};

enum class DriftPath
{
  automatic,
  reference,
  accelerated,
};

//! Row i of the result (n x d) is (1/n) sum_j g((i - j)/n) b(x_i, x_j).
//! The reference path sums every row with compensation; the accelerated path
//! uses pair symmetry when F is odd and g is even.
std::vector<double> drift_field(const SystemSpec& spec, std::span<const double> positions,
                                DriftPath path = DriftPath::automatic);

struct SimulateOptions
{
  //! Particle i draws its noise and initial state from stream key (i + 1) * key_stride.
  //! A population of n with stride m shares paths with particles m, 2m, ... of a population of m n.
  std::uint32_t key_stride = 1;
  DriftPath path = DriftPath::automatic;
};

TrajectorySet simulate(const SystemSpec& spec, std::size_t n, const TimeGrid& grid, std::uint64_t seed,
                       const SimulateOptions& options = {});

void save_trajectories(const TrajectorySet& traj, const std::string& path);
TrajectorySet load_trajectories(const std::string& path);

} // namespace gmf
