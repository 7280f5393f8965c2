#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kaclab/measure.hpp"
#include "kaclab/model.hpp"
#include "kaclab/random.hpp"

namespace kaclab {

/// State V_t of the N-particle system.
struct VelocityEnsemble {
  double time = 0.0;
  std::vector<double> velocities;

  std::size_t size() const { return velocities.size(); }
  /// Throws std::invalid_argument for N < 2 or non-finite velocities.
  void validate() const;
};

/// Applies one event in place. Throws std::invalid_argument on out-of-range
/// indices or an event earlier than the ensemble time.
void apply_event_inplace(VelocityEnsemble& ensemble, const EventRecord& event);
VelocityEnsemble apply_event(VelocityEnsemble ensemble, const EventRecord& event);

struct SimulationHooks {
  /// Nondecreasing times in [initial.time, t_end].
  std::vector<double> sample_times;
  /// Receives (sample index, state as of the last event before the sample time).
  std::function<void(std::size_t, const VelocityEnsemble&)> on_sample;
  /// Called after each applied event.
  std::function<void(const EventRecord&, const VelocityEnsemble&)> on_event;
};

/// Runs the jump process until the next event would pass t_end. The returned
/// ensemble has time t_end.
VelocityEnsemble simulate(VelocityEnsemble initial, const ModelParams& params, double t_end,
                          RandomStream& stream, const SimulationHooks& hooks = {});

struct PairTrajectory {
  VelocityEnsemble a;
  VelocityEnsemble b;
  std::vector<double> times;
  /// h(t) = (1/N) sum (a_i - b_i)^2 at each sample time.
  std::vector<double> h;
  std::size_t events = 0;
};

/// Two copies driven by one event sequence (same times, indices, angles and w).
PairTrajectory simulate_synchronous_pair(VelocityEnsemble a0, VelocityEnsemble b0,
                                         const ModelParams& params, double t_end,
                                         RandomStream& stream,
                                         const std::vector<double>& sample_times);

Measure1D empirical_measure(const VelocityEnsemble& ensemble);

/// (1/N) sum |v_i|^r.
double moment(const VelocityEnsemble& ensemble, double r);

/// Menu of initial laws for particle velocities.
struct InitialCondition {
  enum class Kind { Gaussian, TwoPoint, Uniform, File };
  Kind kind = Kind::TwoPoint;
  double variance = 1.0;  // Gaussian
  double level = 1.4142135623730951;  // TwoPoint: atoms at +-level
  double lo = -1.0, hi = 1.0;  // Uniform
  std::string path;  // File: CSV with header `v`

  static InitialCondition gaussian(double variance);
  static InitialCondition two_point(double level);
  static InitialCondition uniform(double lo, double hi);
  static InitialCondition file(std::string path);

  /// N i.i.d. draws (File: the file's velocities, N must match or be 0).
  std::vector<double> sample(std::size_t n, RandomStream& stream) const;
  /// The one-particle law, for the kinetic solver.
  Measure1D law(const VelocityGrid& grid) const;
  double second_moment() const;
  /// Largest |v| charged by the law (Gaussian: 0).
  double support_radius() const;
};

void write_ensemble_csv(std::ostream& out, const VelocityEnsemble& ensemble);
VelocityEnsemble read_ensemble_csv(std::istream& in);

}  // namespace kaclab
