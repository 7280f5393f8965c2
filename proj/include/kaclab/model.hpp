#pragma once

#include <cstddef>
#include <numbers>
#include <utility>

#include "kaclab/random.hpp"

namespace kaclab {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Kac collision rate, thermostat rate and thermostat temperature.
///
/// Rates are per particle: an N-particle system sees Kac collisions at rate
/// lambda*N and thermostat interactions at rate mu*N.
struct ModelParams {
  double lambda = 1.0;
  double mu = 1.0;
  double temperature = 1.0;

  /// Throws std::invalid_argument unless lambda, mu >= 0, lambda + mu > 0 and
  /// temperature > 0. Zero rates switch a mechanism off.
  void validate() const;

  /// Per-particle loss rate 2*lambda + mu of the kinetic equation.
  double loss_rate() const { return 2.0 * lambda + mu; }
};

/// Collision angle in [0, 2*pi), with its cosine and sine cached.
class Angle {
 public:
  Angle() : Angle(0.0) {}
  explicit Angle(double theta);

  double radians() const { return theta_; }
  double cos() const { return cos_; }
  double sin() const { return sin_; }

  static Angle uniform(RandomStream& stream);

 private:
  double theta_;
  double cos_;
  double sin_;
};

enum class EventKind { Kac, Thermostat };

/// One jump of the Poisson-driven N-particle dynamics.
///
/// Kac events carry the continuous labels (xi, zeta) in [0, N)^2; the particles
/// involved are floor(xi) and floor(zeta) (0-based), and the fractional parts are
/// kept because the Boltzmann-process coupling uses them as transport ranks.
/// Thermostat events carry the 0-based particle index and the reservoir
/// velocity w.
struct EventRecord {
  double time = 0.0;
  EventKind kind = EventKind::Kac;
  double xi = 0.0;
  double zeta = 0.0;
  std::size_t particle = 0;
  Angle angle;
  double w = 0.0;

  std::size_t first() const { return static_cast<std::size_t>(xi); }
  std::size_t second() const { return static_cast<std::size_t>(zeta); }

  static EventRecord kac(double time, double xi, double zeta, Angle angle);
  static EventRecord thermostat(double time, std::size_t particle, Angle angle, double w);

  bool operator==(const EventRecord& other) const;
};

/// (v cos t - v* sin t, v sin t + v* cos t); preserves v^2 + v*^2.
std::pair<double, double> kac_rotate(double v, double v_star, Angle theta);

/// v cos t - w sin t.
double thermostat_rotate(double v, double w, Angle theta);

/// Draws the next event after `clock` for an n-particle system.
///
/// The waiting time is exponential with rate (lambda + mu) n; the event is a
/// Kac collision with probability lambda / (lambda + mu). Throws
/// std::invalid_argument for n < 2.
EventRecord next_event(const ModelParams& params, std::size_t n, double clock,
                       RandomStream& stream);

/// Kac event labels: an ordered pair of distinct particles with uniform
/// fractional parts.
std::pair<double, double> sample_kac_labels(std::size_t n, RandomStream& stream);

}  // namespace kaclab
