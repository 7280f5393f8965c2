#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kaclab/kinetic_solver.hpp"
#include "kaclab/model.hpp"
#include "kaclab/particle_system.hpp"

namespace kaclab {

/// Everything an experiment reads. Parsed from TOML (or JSON) where unknown
/// keys are errors.
///
///   lambda = 1.0
///   mu = 1.0
///   temperature = 1.0
///   n_particles = 10000
///   t_end = 6.0
///   sample_times = [0.5, 1.0, 2.0]
///   replicas = 20
///   seed = 1
///   moment_order = 4.0
///   n_list = [250, 500]
///   k_list = [2, 4]
///
///   [initial]          # kind = gaussian | two_point | uniform | file
///   kind = "two_point"
///   level = 1.4142135623730951
///
///   [reference]        # second initial condition (contraction, solve)
///   kind = "gaussian"
///   variance = 1.0
///
///   [solver]           # any subset of the SolverSettings grid knobs
///   half_points = 2048
struct ExperimentConfig {
  ModelParams params;
  std::size_t n_particles = 1000;
  double t_end = 1.0;
  std::vector<double> sample_times;
  std::size_t replicas = 10;
  std::uint64_t seed = 1;
  double moment_order = 4.0;
  std::vector<std::size_t> n_list;
  std::vector<std::size_t> k_list;
  InitialCondition initial = InitialCondition::two_point(1.4142135623730951);
  InitialCondition reference = InitialCondition::gaussian(1.0);

  double solver_v_max = 0.0;
  std::size_t solver_half_points = 2048;
  std::size_t solver_oversample = 2;
  std::size_t solver_theta_nodes = 64;
  std::size_t solver_table_theta_nodes = 4096;
  double solver_dt = 0.0;
  double solver_mollifier_cells = 2.0;

  /// sample_times, or {t_end} when none were given.
  std::vector<double> times() const;
  SolverSettings solver_settings(int threads) const;

  /// Throws ConfigError.
  void validate() const;
};

/// Parses TOML, or JSON when the first non-blank character is '{'.
/// Throws ConfigError on syntax errors, unknown keys, wrong types and
/// failed validation.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical TOML: fixed key order, every field present, doubles round-trip.
std::string serialize_config(const ExperimentConfig& config);
/// Same content as JSON.
std::string serialize_config_json(const ExperimentConfig& config);

/// FNV-1a 64 of serialize_config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace kaclab
