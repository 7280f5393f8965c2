#include "kaclab/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace kaclab {

void ModelParams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("lambda must be finite and non-negative");
  if (!(mu >= 0.0) || !std::isfinite(mu))
    throw std::invalid_argument("mu must be finite and non-negative");
  if (!(lambda + mu > 0.0)) throw std::invalid_argument("lambda + mu must be positive");
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw std::invalid_argument("temperature must be finite and positive");
}

Angle::Angle(double theta) : theta_(theta) {
  if (!(theta >= 0.0 && theta < two_pi))
    throw std::invalid_argument("Angle: theta must lie in [0, 2pi), got " + std::to_string(theta));
  cos_ = std::cos(theta);
  sin_ = std::sin(theta);
}

Angle Angle::uniform(RandomStream& stream) {
  double theta = two_pi * stream.uniform();
  if (theta >= two_pi) theta = 0.0;
  return Angle(theta);
}

EventRecord EventRecord::kac(double time, double xi, double zeta, Angle angle) {
  EventRecord e;
  e.time = time;
  e.kind = EventKind::Kac;
  e.xi = xi;
  e.zeta = zeta;
  e.angle = angle;
  return e;
}

EventRecord EventRecord::thermostat(double time, std::size_t particle, Angle angle, double w) {
  EventRecord e;
  e.time = time;
  e.kind = EventKind::Thermostat;
  e.particle = particle;
  e.angle = angle;
  e.w = w;
  return e;
}

bool EventRecord::operator==(const EventRecord& o) const {
  return time == o.time && kind == o.kind && xi == o.xi && zeta == o.zeta &&
         particle == o.particle && angle.radians() == o.angle.radians() && w == o.w;
}

std::pair<double, double> kac_rotate(double v, double v_star, Angle theta) {
  const double c = theta.cos();
  const double s = theta.sin();
  return {v * c - v_star * s, v * s + v_star * c};
}

double thermostat_rotate(double v, double w, Angle theta) {
  return v * theta.cos() - w * theta.sin();
}

std::pair<double, double> sample_kac_labels(std::size_t n, RandomStream& stream) {
  const std::size_t i = stream.index(n);
  std::size_t j = stream.index(n - 1);
  if (j >= i) ++j;
  const double xi = static_cast<double>(i) + stream.uniform();
  const double zeta = static_cast<double>(j) + stream.uniform();
  return {xi, zeta};
}

EventRecord next_event(const ModelParams& params, std::size_t n, double clock,
                       RandomStream& stream) {
  if (n < 2) throw std::invalid_argument("next_event: need at least two particles");
  const double total = (params.lambda + params.mu) * static_cast<double>(n);
  const double time = clock + stream.exponential(total);
  const double pick = stream.uniform() * (params.lambda + params.mu);
  if (pick < params.lambda) {
    auto [xi, zeta] = sample_kac_labels(n, stream);
    return EventRecord::kac(time, xi, zeta, Angle::uniform(stream));
  }
  const std::size_t i = stream.index(n);
  const Angle theta = Angle::uniform(stream);
  const double w = stream.normal(0.0, std::sqrt(params.temperature));
  return EventRecord::thermostat(time, i, theta, w);
}

}  // namespace kaclab
