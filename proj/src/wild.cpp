#include <omp.h>

#include <cmath>
#include <stdexcept>

#include "kaclab/errors.hpp"
#include "kaclab/kernels.hpp"
#include "kaclab/kinetic_solver.hpp"

namespace kaclab {

Measure1D b_operator(const Measure1D& nu1, const Measure1D& nu2, std::size_t theta_nodes) {
  if (theta_nodes == 0) throw std::invalid_argument("b_operator: need at least one theta node");
  if (!std::isfinite(nu1.mass()) || !std::isfinite(nu2.mass()))
    throw std::invalid_argument("b_operator: masses must be finite");
  if (nu1.is_atoms() && nu2.is_atoms()) {
    const double inv = 1.0 / static_cast<double>(theta_nodes);
    std::vector<double> p, w;
    p.reserve(nu1.positions().size() * nu2.positions().size() * theta_nodes);
    w.reserve(p.capacity());
    for (std::size_t a = 0; a < nu1.positions().size(); ++a) {
      for (std::size_t b = 0; b < nu2.positions().size(); ++b) {
        const double x = nu1.positions()[a], y = nu2.positions()[b];
        const double wt = nu1.weights()[a] * nu2.weights()[b] * inv;
        for (std::size_t q = 0; q < theta_nodes; ++q) {
          const double th = two_pi * static_cast<double>(q) * inv;
          p.push_back(x * std::cos(th) + y * std::sin(th));
          w.push_back(wt);
        }
      }
    }
    return Measure1D::atoms(std::move(p), std::move(w));
  }
  if (!nu1.is_atoms() && !nu2.is_atoms() && !(nu1.velocity_grid() == nu2.velocity_grid()))
    throw std::invalid_argument("b_operator: grid measures live on different grids");
  const VelocityGrid grid = nu1.is_atoms() ? nu2.velocity_grid() : nu1.velocity_grid();
  const GridConvolver conv(grid, theta_nodes);
  const auto masses = conv.apply(nu1.node_masses(grid), nu2.node_masses(grid));
  std::vector<double> density(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) density[i] = masses[i] / grid.weight(i);
  return Measure1D::grid(grid, std::move(density));
}

namespace {

/// Weights for the integral over [0, s_m] of samples on s_l = l h.
std::vector<std::vector<double>> prefix_weights(std::size_t S, double h) {
  std::vector<std::vector<double>> w(S + 1, std::vector<double>(S + 1, 0.0));
  auto simpson = [&](std::vector<double>& row, std::size_t from, std::size_t to) {
    for (std::size_t l = from; l < to; l += 2) {
      row[l] += h / 3.0;
      row[l + 1] += 4.0 * h / 3.0;
      row[l + 2] += h / 3.0;
    }
  };
  for (std::size_t m = 1; m <= S; ++m) {
    auto& row = w[m];
    if (m == 1) {
      row[0] = 5.0 * h / 12.0;
      row[1] = 8.0 * h / 12.0;
      row[2] = -h / 12.0;
    } else if (m % 2 == 0) {
      simpson(row, 0, m);
    } else {
      simpson(row, 0, m - 3);
      const double a = 3.0 * h / 8.0;
      row[m - 3] += a;
      row[m - 2] += 3.0 * a;
      row[m - 1] += 3.0 * a;
      row[m] += a;
    }
  }
  return w;
}

}  // namespace

WildResult wild_iterate(const Measure1D& f0, const ModelParams& params, double t,
                        const VelocityGrid& grid, const WildSettings& settings) {
  params.validate();
  if (std::abs(f0.mass() - 1.0) > 1e-8) throw std::invalid_argument("wild_iterate: f0 must be a probability measure");
  if (!(t >= 0.0)) throw std::invalid_argument("wild_iterate: t must be nonnegative");
  const std::size_t S = settings.time_intervals;
  if (S < 2) throw std::invalid_argument("wild_iterate: need at least two time intervals");
  const int threads = settings.threads > 0 ? settings.threads : omp_get_max_threads();
  const double c = params.loss_rate();
  const double h = t / static_cast<double>(S);
  const std::size_t n = grid.size();

  const GridConvolver conv(grid, settings.theta_nodes);
  const std::vector<double> m0 = f0.node_masses(grid);
  std::vector<double> gm = Measure1D::gaussian(params.temperature, grid).node_masses(grid);
  const auto gspec = conv.prepare(gm);
  const auto W = prefix_weights(S, h);

  std::vector<std::vector<double>> u(S + 1, std::vector<double>(n));
  for (std::size_t m = 0; m <= S; ++m) {
    const double d = std::exp(-c * h * static_cast<double>(m));
    for (std::size_t i = 0; i < n; ++i) u[m][i] = d * m0[i];
  }
  WildResult res;
  auto total = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  };
  res.masses.push_back(total(u[S]));
  std::vector<std::vector<double>> gain(S + 1);
  for (std::size_t it = 0; it < settings.n_max; ++it) {
    const auto nm = static_cast<long long>(S + 1);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (long long mm = 0; mm < nm; ++mm) {
      const auto m = static_cast<std::size_t>(mm);
      const auto spec = conv.prepare(u[m]);
      auto bg = conv.combine(spec, gspec);
      const auto bb = conv.combine(spec, spec);
      for (std::size_t i = 0; i < n; ++i) bg[i] = params.mu * bg[i] + 2.0 * params.lambda * bb[i];
      gain[m] = std::move(bg);
    }
    for (std::size_t m = 0; m <= S; ++m) {
      const double sm = h * static_cast<double>(m);
      const double d = std::exp(-c * sm);
      auto& row = u[m];
      for (std::size_t i = 0; i < n; ++i) row[i] = d * m0[i];
      for (std::size_t l = 0; l <= S; ++l) {
        if (W[m][l] == 0.0) continue;
        const double f = W[m][l] * std::exp(-c * (sm - h * static_cast<double>(l)));
        for (std::size_t i = 0; i < n; ++i) row[i] += f * gain[l][i];
      }
    }
    const double mass = total(u[S]);
    if (!std::isfinite(mass) || mass > 1.0 + 1e-6)
      throw NumericalAbort("wild_iterate: iteration mass " + std::to_string(mass) +
                           " left [0, 1]; refine the time quadrature");
    res.masses.push_back(mass);
  }
  std::vector<double> density(n);
  for (std::size_t i = 0; i < n; ++i) density[i] = std::max(0.0, u[S][i]) / grid.weight(i);
  res.measure = Measure1D::grid(grid, std::move(density));
  res.mass_deficit = 1.0 - res.masses.back();
  return res;
}

}  // namespace kaclab
