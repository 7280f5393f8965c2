#include "kaclab/boltzmann_coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>

#include "kaclab/wasserstein.hpp"

namespace kaclab {

RankIndex::RankIndex(std::span<const double> values) {
  sorted_.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sorted_.emplace_back(values[i], i);
  std::sort(sorted_.begin(), sorted_.end());
}

void RankIndex::update(std::size_t i, double old_value, double new_value) {
  const std::pair<double, std::size_t> old_key{old_value, i}, new_key{new_value, i};
  auto from = std::lower_bound(sorted_.begin(), sorted_.end(), old_key);
  if (from == sorted_.end() || *from != old_key) throw std::logic_error("RankIndex: stale entry");
  auto to = std::lower_bound(sorted_.begin(), sorted_.end(), new_key);
  if (to > from) {
    std::rotate(from, from + 1, to);
    *(to - 1) = new_key;
  } else {
    std::rotate(to, from, from + 1);
    *to = new_key;
  }
}

std::size_t RankIndex::rank(double value, std::size_t index) const {
  return static_cast<std::size_t>(
      std::lower_bound(sorted_.begin(), sorted_.end(), std::pair<double, std::size_t>{value, index}) -
      sorted_.begin());
}

namespace {

void check_label(std::size_t n, std::size_t i, double xi) {
  if (n < 2) throw std::invalid_argument("transport_map: need N >= 2");
  if (i >= n) throw std::invalid_argument("transport_map: index out of range");
  if (!(xi >= 0.0 && xi < static_cast<double>(n)))
    throw std::invalid_argument("transport_map: label outside [0, N)");
  if (static_cast<std::size_t>(xi) == i)
    throw std::invalid_argument("transport_map: label inside the forbidden block of particle " +
                                std::to_string(i));
}

inline bool before(double va, std::size_t a, double vb, std::size_t b) {
  return va < vb || (va == vb && a < b);
}

/// Rank of label xi for particle i given the full rank of its partner.
inline double rank_to_u(std::size_t partner_rank, bool self_before, double xi, std::size_t n) {
  const double rho = static_cast<double>(partner_rank - (self_before ? 1 : 0));
  const double frac = xi - std::floor(xi);
  return (rho + frac) / static_cast<double>(n - 1);
}

}  // namespace

double transport_rank(std::span<const double> z, std::size_t i, double xi) {
  check_label(z.size(), i, xi);
  const auto p = static_cast<std::size_t>(xi);
  std::size_t r = 0;
  for (std::size_t j = 0; j < z.size(); ++j)
    if (j != i && before(z[j], j, z[p], p)) ++r;
  const double frac = xi - std::floor(xi);
  return (static_cast<double>(r) + frac) / static_cast<double>(z.size() - 1);
}

double transport_map(std::span<const double> z, std::size_t i, double xi, const QuantileFn& q) {
  return q(transport_rank(z, i, xi));
}

namespace {

/// Z array with its rank index; F^i evaluated in O(log N).
class DrivenArray {
 public:
  explicit DrivenArray(std::vector<double> z) : z_(std::move(z)), index_(z_) {}

  const std::vector<double>& values() const { return z_; }
  double operator[](std::size_t i) const { return z_[i]; }

  double rank_u(std::size_t i, double xi) const {
    const auto p = static_cast<std::size_t>(xi);
    const std::size_t r = index_.rank(z_[p], p);
    return rank_to_u(r, before(z_[i], i, z_[p], p), xi, z_.size());
  }

  void set(std::size_t i, double v) {
    index_.update(i, z_[i], v);
    z_[i] = v;
  }

 private:
  std::vector<double> z_;
  RankIndex index_;
};

void check_horizon(const QuantileSource& s, double t_end) {
  if (t_end > s.horizon() * (1.0 + 1e-12))
    throw std::out_of_range("t_end beyond the kinetic solution horizon");
}

void check_sample_times(const std::vector<double>& s, double t_end) {
  for (std::size_t k = 0; k < s.size(); ++k)
    if (s[k] < 0.0 || s[k] > t_end || (k > 0 && s[k] < s[k - 1]))
      throw std::invalid_argument("sample times must be nondecreasing within [0, t_end]");
}

double w2_without_first(const std::vector<double>& z, const QuantileFn& q) {
  std::vector<double> rest(z.begin() + 1, z.end());
  std::sort(rest.begin(), rest.end());
  return w2_sorted_quantile(rest, q);
}

}  // namespace

CoupledTrajectory simulate_coupled(std::vector<double> V0, std::vector<double> Z0,
                                   const ModelParams& params, const QuantileSource& solution,
                                   double t_end, RandomStream& stream,
                                   const std::vector<double>& sample_times,
                                   const CoupledObserver& observer) {
  params.validate();
  const std::size_t n = V0.size();
  if (n < 2 || Z0.size() != n) throw std::invalid_argument("simulate_coupled: V and Z need equal N >= 2");
  check_horizon(solution, t_end);
  check_sample_times(sample_times, t_end);
  CoupledTrajectory out;
  std::vector<double> V = std::move(V0);
  DrivenArray Z(std::move(Z0));
  std::size_t next = 0;
  auto emit_until = [&](double t, bool inclusive) {
    while (next < sample_times.size() && (sample_times[next] < t || (inclusive && sample_times[next] <= t))) {
      const double ts = sample_times[next];
      double h = 0.0;
      for (std::size_t i = 0; i < n; ++i) h += (V[i] - Z[i]) * (V[i] - Z[i]);
      out.times.push_back(ts);
      out.h.push_back(h / static_cast<double>(n));
      out.a.push_back(w2_without_first(Z.values(), solution.quantile_fn(ts)));
      if (observer) observer(next, ts, V, Z.values());
      ++next;
    }
  };
  double clock = 0.0;
  for (;;) {
    const EventRecord ev = next_event(params, n, clock, stream);
    if (ev.time > t_end) break;
    emit_until(ev.time, false);
    clock = ev.time;
    const double c = ev.angle.cos(), s = ev.angle.sin();
    if (ev.kind == EventKind::Kac) {
      const std::size_t i = ev.first(), j = ev.second();
      const double fi = solution.quantile(ev.time, Z.rank_u(i, ev.zeta));
      const double fj = solution.quantile(ev.time, Z.rank_u(j, ev.xi));
      std::tie(V[i], V[j]) = kac_rotate(V[i], V[j], ev.angle);
      const double zi = Z[i] * c - fi * s;
      const double zj = Z[j] * c + fj * s;
      Z.set(i, zi);
      Z.set(j, zj);
    } else {
      const std::size_t p = ev.particle;
      V[p] = thermostat_rotate(V[p], ev.w, ev.angle);
      Z.set(p, thermostat_rotate(Z[p], ev.w, ev.angle));
    }
    ++out.events;
  }
  emit_until(t_end, true);
  out.V = std::move(V);
  out.Z = Z.values();
  return out;
}

DecoupledTrajectory simulate_independent_copies(std::vector<double> Z0, std::size_t k,
                                                const ModelParams& params,
                                                const QuantileSource& solution, double t_end,
                                                RandomStream& stream, RandomStream& extra_stream,
                                                const std::vector<double>& sample_times) {
  params.validate();
  const std::size_t n = Z0.size();
  if (n < 2) throw std::invalid_argument("simulate_independent_copies: need N >= 2");
  if (k < 1 || k > n) throw std::invalid_argument("simulate_independent_copies: need 1 <= k <= N");
  check_horizon(solution, t_end);
  check_sample_times(sample_times, t_end);
  const std::size_t blocks = n / k;
  const std::size_t covered = blocks * k;
  std::vector<double> Zt = Z0;
  DrivenArray Z(std::move(Z0));
  DecoupledTrajectory out;

  const double extra_rate =
      params.lambda * static_cast<double>(k - 1) / static_cast<double>(n - 1) * static_cast<double>(covered);
  auto next_extra = [&](double from) {
    return extra_rate > 0.0 ? from + extra_stream.exponential(extra_rate)
                            : std::numeric_limits<double>::infinity();
  };

  std::size_t next = 0;
  auto emit_until = [&](double t, bool inclusive) {
    while (next < sample_times.size() && (sample_times[next] < t || (inclusive && sample_times[next] <= t))) {
      double h = 0.0;
      for (std::size_t i = 0; i < covered; ++i) h += (Z[i] - Zt[i]) * (Z[i] - Zt[i]);
      out.times.push_back(sample_times[next]);
      out.h_dec.push_back(h / static_cast<double>(covered));
      ++next;
    }
  };

  double clock = 0.0;
  EventRecord ev = next_event(params, n, clock, stream);
  double tx = next_extra(0.0);
  for (;;) {
    if (ev.time > t_end && tx > t_end) break;
    if (tx < ev.time) {
      emit_until(tx, false);
      const std::size_t b = extra_stream.index(blocks);
      const std::size_t i = b * k + extra_stream.index(k);
      std::size_t p = b * k + extra_stream.index(k - 1);
      if (p >= i) ++p;
      const double xi = static_cast<double>(p) + extra_stream.uniform();
      const Angle th = Angle::uniform(extra_stream);
      const double f = solution.quantile(tx, Z.rank_u(i, xi));
      Zt[i] = Zt[i] * th.cos() + f * th.sin();
      ++out.replacements;
      tx = next_extra(tx);
      continue;
    }
    emit_until(ev.time, false);
    clock = ev.time;
    const double c = ev.angle.cos(), s = ev.angle.sin();
    if (ev.kind == EventKind::Kac) {
      const std::size_t i = ev.first(), j = ev.second();
      const double fi = solution.quantile(ev.time, Z.rank_u(i, ev.zeta));
      const double fj = solution.quantile(ev.time, Z.rank_u(j, ev.xi));
      if (i < covered) Zt[i] = Zt[i] * c - fi * s;
      if (j < covered) {
        if (i < covered && i / k == j / k) ++out.skipped;
        else Zt[j] = Zt[j] * c + fj * s;
      }
      const double zi = Z[i] * c - fi * s;
      const double zj = Z[j] * c + fj * s;
      Z.set(i, zi);
      Z.set(j, zj);
    } else {
      const std::size_t p = ev.particle;
      Z.set(p, thermostat_rotate(Z[p], ev.w, ev.angle));
      if (p < covered) Zt[p] = thermostat_rotate(Zt[p], ev.w, ev.angle);
    }
    ev = next_event(params, n, clock, stream);
  }
  emit_until(t_end, true);
  out.Z = Z.values();
  out.Z_tilde = std::move(Zt);
  return out;
}

std::vector<double> simulate_boltzmann(double z, const ModelParams& params,
                                       const QuantileSource& solution, double t_end,
                                       RandomStream& stream, const std::vector<double>& sample_times) {
  params.validate();
  check_horizon(solution, t_end);
  check_sample_times(sample_times, t_end);
  const double kac = 2.0 * params.lambda;
  const double total = kac + params.mu;
  std::vector<double> out;
  std::size_t next = 0;
  double t = 0.0;
  for (;;) {
    const double tn = t + stream.exponential(total);
    while (next < sample_times.size() && sample_times[next] < tn) {
      out.push_back(z);
      ++next;
    }
    if (tn > t_end) break;
    t = tn;
    const bool partner = stream.uniform() * total < kac;
    const Angle th = Angle::uniform(stream);
    if (partner) {
      const double u = stream.uniform();
      z = z * th.cos() - solution.quantile(t, u) * th.sin();
    } else {
      z = thermostat_rotate(z, stream.normal(0.0, std::sqrt(params.temperature)), th);
    }
  }
  while (next < sample_times.size()) {
    out.push_back(z);
    ++next;
  }
  return out;
}

}  // namespace kaclab
