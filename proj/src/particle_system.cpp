#include "kaclab/particle_system.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include "kaclab/csv.hpp"

namespace kaclab {

void VelocityEnsemble::validate() const {
  if (velocities.size() < 2) throw std::invalid_argument("VelocityEnsemble: need N >= 2");
  for (double v : velocities)
    if (!std::isfinite(v)) throw std::invalid_argument("VelocityEnsemble: non-finite velocity");
}

void apply_event_inplace(VelocityEnsemble& e, const EventRecord& ev) {
  if (ev.time < e.time) throw std::invalid_argument("apply_event: event precedes ensemble time");
  auto& v = e.velocities;
  if (ev.kind == EventKind::Kac) {
    const std::size_t i = ev.first(), j = ev.second();
    if (i >= v.size() || j >= v.size() || i == j)
      throw std::invalid_argument("apply_event: Kac indices out of range");
    std::tie(v[i], v[j]) = kac_rotate(v[i], v[j], ev.angle);
  } else {
    if (ev.particle >= v.size()) throw std::invalid_argument("apply_event: particle out of range");
    v[ev.particle] = thermostat_rotate(v[ev.particle], ev.w, ev.angle);
  }
  e.time = ev.time;
}

VelocityEnsemble apply_event(VelocityEnsemble e, const EventRecord& ev) {
  apply_event_inplace(e, ev);
  return e;
}

namespace {

void check_samples(const std::vector<double>& s, double t0, double t_end) {
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] < t0 || s[k] > t_end || (k > 0 && s[k] < s[k - 1]))
      throw std::invalid_argument("sample times must be nondecreasing within [t0, t_end]");
  }
}

}  // namespace

VelocityEnsemble simulate(VelocityEnsemble state, const ModelParams& params, double t_end,
                          RandomStream& stream, const SimulationHooks& hooks) {
  params.validate();
  state.validate();
  if (t_end < state.time) throw std::invalid_argument("simulate: t_end precedes initial time");
  check_samples(hooks.sample_times, state.time, t_end);
  const std::size_t n = state.size();
  std::size_t next_sample = 0;
  auto emit_until = [&](double t, bool inclusive) {
    while (next_sample < hooks.sample_times.size() &&
           (hooks.sample_times[next_sample] < t || (inclusive && hooks.sample_times[next_sample] <= t))) {
      if (hooks.on_sample) {
        const double saved = state.time;
        state.time = hooks.sample_times[next_sample];
        hooks.on_sample(next_sample, state);
        state.time = saved;
      }
      ++next_sample;
    }
  };
  if (t_end == state.time) {
    emit_until(t_end, true);
    return state;
  }
  double clock = state.time;
  for (;;) {
    EventRecord ev = next_event(params, n, clock, stream);
    if (ev.time > t_end) break;
    emit_until(ev.time, false);
    apply_event_inplace(state, ev);
    clock = ev.time;
    if (hooks.on_event) hooks.on_event(ev, state);
  }
  emit_until(t_end, true);
  state.time = t_end;
  return state;
}

PairTrajectory simulate_synchronous_pair(VelocityEnsemble a0, VelocityEnsemble b0,
                                         const ModelParams& params, double t_end,
                                         RandomStream& stream,
                                         const std::vector<double>& sample_times) {
  if (a0.size() != b0.size()) throw std::invalid_argument("synchronous pair: N mismatch");
  if (a0.time != b0.time) throw std::invalid_argument("synchronous pair: time mismatch");
  b0.validate();
  PairTrajectory out;
  out.b = std::move(b0);
  auto gap = [&](const VelocityEnsemble& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a.velocities[i] - out.b.velocities[i];
      s += d * d;
    }
    return s / static_cast<double>(a.size());
  };
  SimulationHooks hooks;
  hooks.sample_times = sample_times;
  hooks.on_sample = [&](std::size_t, const VelocityEnsemble& a) {
    out.times.push_back(a.time);
    out.h.push_back(gap(a));
  };
  hooks.on_event = [&](const EventRecord& ev, const VelocityEnsemble&) {
    apply_event_inplace(out.b, ev);
    ++out.events;
  };
  out.a = simulate(std::move(a0), params, t_end, stream, hooks);
  out.b.time = out.a.time;
  return out;
}

Measure1D empirical_measure(const VelocityEnsemble& e) {
  return Measure1D::equal_atoms(e.velocities).merged();
}

double moment(const VelocityEnsemble& e, double r) {
  if (r < 0.0) throw std::invalid_argument("moment: order must be nonnegative");
  if (e.velocities.empty()) return 0.0;
  double s = 0.0;
  if (r == 2.0) {
    for (double v : e.velocities) s += v * v;
  } else if (r == 4.0) {
    for (double v : e.velocities) s += v * v * v * v;
  } else {
    for (double v : e.velocities) s += std::pow(std::abs(v), r);
  }
  return s / static_cast<double>(e.velocities.size());
}

InitialCondition InitialCondition::gaussian(double variance) {
  InitialCondition ic;
  ic.kind = Kind::Gaussian;
  ic.variance = variance;
  return ic;
}

InitialCondition InitialCondition::two_point(double level) {
  InitialCondition ic;
  ic.kind = Kind::TwoPoint;
  ic.level = level;
  return ic;
}

InitialCondition InitialCondition::uniform(double lo, double hi) {
  InitialCondition ic;
  ic.kind = Kind::Uniform;
  ic.lo = lo;
  ic.hi = hi;
  return ic;
}

InitialCondition InitialCondition::file(std::string path) {
  InitialCondition ic;
  ic.kind = Kind::File;
  ic.path = std::move(path);
  return ic;
}

namespace {

std::vector<double> load_velocities(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ensemble file " + path);
  return read_ensemble_csv(in).velocities;
}

}  // namespace

std::vector<double> InitialCondition::sample(std::size_t n, RandomStream& stream) const {
  std::vector<double> v;
  switch (kind) {
    case Kind::Gaussian:
      v.resize(n);
      for (auto& x : v) x = stream.normal(0.0, std::sqrt(variance));
      break;
    case Kind::TwoPoint:
      v.resize(n);
      for (auto& x : v) x = stream.uniform() < 0.5 ? -level : level;
      break;
    case Kind::Uniform:
      v.resize(n);
      for (auto& x : v) x = stream.uniform(lo, hi);
      break;
    case Kind::File:
      v = load_velocities(path);
      if (n != 0 && v.size() != n)
        throw std::invalid_argument("ensemble file has " + std::to_string(v.size()) +
                                    " velocities, expected " + std::to_string(n));
      break;
  }
  return v;
}

Measure1D InitialCondition::law(const VelocityGrid& grid) const {
  switch (kind) {
    case Kind::Gaussian:
      return Measure1D::gaussian(variance, grid);
    case Kind::TwoPoint:
      if (level == 0.0) return Measure1D::dirac(0.0);
      return Measure1D::atoms({-level, level}, {0.5, 0.5});
    case Kind::Uniform: {
      std::vector<double> d(grid.size(), 0.0);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = grid.at(i);
        if (v >= lo && v <= hi) d[i] = 1.0 / (hi - lo);
      }
      Measure1D m = Measure1D::grid(grid, std::move(d));
      return m.scaled(1.0 / m.mass());
    }
    case Kind::File:
      return Measure1D::equal_atoms(load_velocities(path)).merged();
  }
  throw std::logic_error("unreachable");
}

double InitialCondition::second_moment() const {
  switch (kind) {
    case Kind::Gaussian: return variance;
    case Kind::TwoPoint: return level * level;
    case Kind::Uniform: return (hi * hi + hi * lo + lo * lo) / 3.0;
    case Kind::File: {
      VelocityEnsemble e{0.0, load_velocities(path)};
      return moment(e, 2.0);
    }
  }
  return 0.0;
}

double InitialCondition::support_radius() const {
  switch (kind) {
    case Kind::Gaussian: return 0.0;
    case Kind::TwoPoint: return std::abs(level);
    case Kind::Uniform: return std::max(std::abs(lo), std::abs(hi));
    case Kind::File: {
      double r = 0.0;
      for (double v : load_velocities(path)) r = std::max(r, std::abs(v));
      return r;
    }
  }
  return 0.0;
}

void write_ensemble_csv(std::ostream& out, const VelocityEnsemble& e) {
  CsvWriter w(out, {"v"});
  for (double v : e.velocities) w.row({v});
}

VelocityEnsemble read_ensemble_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const std::size_t c = t.column("v");
  VelocityEnsemble e;
  for (const auto& r : t.rows) e.velocities.push_back(r[c]);
  return e;
}

}  // namespace kaclab
