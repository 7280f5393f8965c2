#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "kaclab/config.hpp"
#include "kaclab/kinetic_solver.hpp"

namespace kaclab {

struct RunOptions {
  /// Replica worker pool size; 0 keeps the OpenMP default.
  int threads = 0;
  /// Evaluate the acceptance gates.
  bool check = false;
};

struct CsvFile {
  std::string name;
  std::string content;
};

struct CommandResult {
  std::vector<CsvFile> files;
  /// One message per failed gate (only filled when RunOptions::check is set).
  std::vector<std::string> gate_failures;
  bool passed() const { return gate_failures.empty(); }
};

struct EnergyRow {
  double t, mean, stderr_, predicted;
};
/// Replica mean of (1/N) sum v_i^2 at each sample time.
std::vector<EnergyRow> run_energy(const ExperimentConfig& config, int threads);

struct ContractionRow {
  double t, h, stderr_, h0_decay;
  /// Replica mean and stderr of h_r(t) / (h_r(0) e^{-mu t/2}) over replicas with h_r(0) > 0.
  double ratio, ratio_stderr;
  std::size_t ratio_replicas;
};
/// Synchronous pairs started from `initial` and `reference`. When both are the
/// same law the two copies share their initial draw.
std::vector<ContractionRow> run_contraction(const ExperimentConfig& config, int threads);

/// Solver grid and f0 for an initial condition, then solve to t_end with the
/// configured sample times as output times.
KineticSolution solve_initial(const ExperimentConfig& config, const InitialCondition& ic, int threads);

struct ChaosRow {
  std::size_t n;
  double t, chaos, stderr_, h, a;
};
struct SlopeFit {
  double t, slope, intercept;
};
struct ChaosScan {
  std::vector<ChaosRow> rows;
  /// log chaos against log N, one fit per sample time.
  std::vector<SlopeFit> fits;
};
/// Coupled construction for each N in n_list with V0 = Z0 i.i.d. from `initial`.
ChaosScan run_chaos_scan(const ExperimentConfig& config, const KineticSolution& solution, int threads);

struct DecouplingRow {
  std::size_t k, n;
  double t, h_dec, stderr_;
};
struct DecouplingFit {
  double t, c, r2;
};
struct DecouplingScan {
  std::vector<DecouplingRow> rows;
  std::vector<DecouplingFit> fits;
};
/// Independent copies for every (N, k) cell of n_list x k_list.
DecouplingScan run_decoupling(const ExperimentConfig& config, const KineticSolution& solution, int threads);

struct MomentRow {
  double t, moment, envelope;
  bool violation;
};
std::vector<MomentRow> run_moments(const ExperimentConfig& config, const KineticSolution& solution);

/// Least squares y = C x through the origin.
DecouplingFit fit_proportional(double t, const std::vector<double>& x, const std::vector<double>& y);
/// Least squares log y = b log x + a.
SlopeFit fit_loglog(double t, const std::vector<double>& x, const std::vector<double>& y);

CommandResult cmd_simulate(const ExperimentConfig& config, const RunOptions& options);
CommandResult cmd_solve(const ExperimentConfig& config, const RunOptions& options);
CommandResult cmd_contraction(const ExperimentConfig& config, const RunOptions& options);
CommandResult cmd_chaos_scan(const ExperimentConfig& config, const RunOptions& options);
CommandResult cmd_decoupling(const ExperimentConfig& config, const RunOptions& options);
CommandResult cmd_moments(const ExperimentConfig& config, const RunOptions& options);

/// Dispatch by CLI name; throws ConfigError for an unknown command.
CommandResult run_command(const std::string& name, const ExperimentConfig& config, const RunOptions& options);

bool same_law(const InitialCondition& a, const InitialCondition& b);

}  // namespace kaclab
