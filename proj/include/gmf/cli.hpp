#pragma once

#include "gmf/experiments.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace gmf {

//! Parses a JSON config file. Syntax errors name the line and column.
nlohmann::json read_config(const std::string& path);

//! Thin wrapper so producers share one CSV writer.
void write_csv(const CsvTable& table, const std::string& path);

struct RunManifest
{
  std::string command_line;
  std::string config_digest;
  //! path -> SHA-256 hex of the file's bytes.
  std::map<std::string, std::string> trajectory_digests;
  std::string tool_version = GMF_VERSION;
  double wall_time_seconds = 0.0;
  std::uint64_t master_seed = 0;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
  void write(const std::string& path) const;
};

//! Builds the estimator tuple for a trajectory from a theta config.
//! See docs/config.md.
Theta theta_from_json(const nlohmann::json& cfg, const TrajectorySet& traj);

//! Entry point of the command-line tool. Returns the process exit code:
//! 0 success, 1 user error, 2 internal error.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace gmf
