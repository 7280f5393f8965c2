#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include "kaclab/errors.hpp"
#include "kaclab/kernels.hpp"
#include "kaclab/kinetic_solver.hpp"
#include "kaclab/random.hpp"
#include "oracles.hpp"

using namespace kaclab;

namespace {

const ModelParams unit{1.0, 1.0, 1.0};

Measure1D two_point() { return Measure1D::atoms({-std::sqrt(2.0), std::sqrt(2.0)}, {0.5, 0.5}); }

/// One shared two-point solve reused across cases.
const KineticSolution& two_point_solution() {
  static const KineticSolution sol = [] {
    SolverSettings s;
    s.output_times = {0.0, 0.5, 1.0, 2.0 * std::log(2.0), 3.0, 6.0};
    return solve(two_point(), unit, 6.0, s);
  }();
  return sol;
}

}  // namespace

TEST_CASE("second_moment_exact examples") {
  CHECK(second_moment_exact(1.0, unit, 3.7) == doctest::Approx(1.0));
  CHECK(second_moment_exact(2.0, ModelParams{1, 2, 1}, 200.0) == doctest::Approx(1.0));
  CHECK(second_moment_exact(0.0, unit, 2 * std::log(2.0)) == doctest::Approx(0.5));
}

TEST_CASE("moment bound constants for r = 4") {
  CHECK(abs_cos_moment(4) == doctest::Approx(3.0 / 8.0).epsilon(1e-14));
  CHECK(abs_cos_moment(4) == doctest::Approx(oracle::abs_cos_average(4)).epsilon(1e-10));
  CHECK(abs_cos_moment(3) == doctest::Approx(oracle::abs_cos_average(3)).epsilon(1e-8));
  const auto b = moment_bound(4, 4.0, unit, 1.0, 2.0);
  CHECK(b.c_r == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(b.c1 == doctest::Approx(9.0 / 8.0).epsilon(1e-14));
  CHECK(b.envelope >= 4.0);
  CHECK_THROWS_AS(moment_bound(2, 1.0, unit, 1.0, 1.0), std::invalid_argument);
  CHECK(gaussian_abs_moment(4, 2.0) == doctest::Approx(12.0));
  CHECK(gaussian_abs_moment(2, 1.5) == doctest::Approx(1.5));
}

TEST_CASE("moment envelope starts at m0 and is monotone in m0") {
  const auto a = moment_envelope(4, 4.0, unit, 2.0, {0.0, 1.0, 5.0});
  const auto b = moment_envelope(4, 8.0, unit, 2.0, {0.0, 1.0, 5.0});
  CHECK(a[0] == 4.0);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] >= a[i]);
}

TEST_CASE("b_operator examples on atoms") {
  const auto c = b_operator(Measure1D::dirac(1.0), Measure1D::dirac(0.0));
  CHECK(c.mass() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c.abs_moment(2) == doctest::Approx(0.5).epsilon(1e-14));
  const auto m = b_operator(Measure1D::atoms({1.0, -2.0}, {1.5, 0.5}), Measure1D::atoms({0.3}, {3.0}));
  CHECK(m.mass() == doctest::Approx(6.0).epsilon(1e-14));
  // e1 = 4, e2 = 2 -> (e1 + e2) / 2
  const auto e = b_operator(Measure1D::atoms({-2, 2}, {0.5, 0.5}),
                            Measure1D::atoms({-std::sqrt(2.0), std::sqrt(2.0)}, {0.5, 0.5}));
  CHECK(e.abs_moment(2) == doctest::Approx(3.0).epsilon(1e-13));
}

TEST_CASE("b_operator on grids") {
  const VelocityGrid g{8.0, 256};
  const auto gam = Measure1D::gaussian(1.0, g);
  const auto b = b_operator(gam, gam);
  CHECK(b.mass() == doctest::Approx(1.0).epsilon(1e-10));
  // gamma is a fixed point of B[gamma, gamma]
  for (std::size_t i = 0; i < g.size(); i += 16)
    CHECK(b.density()[i] == doctest::Approx(gam.density()[i]).epsilon(2e-3).scale(1e-3));
  CHECK(b.abs_moment(2) == doctest::Approx(1.0).epsilon(2e-3));
  const VelocityGrid other{4.0, 256};
  CHECK_THROWS_AS(b_operator(gam, Measure1D::gaussian(1.0, other)), std::invalid_argument);
}

TEST_CASE("b_operator is monotone on grids") {
  const VelocityGrid g{6.0, 128};
  RandomStream s(4, 4);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> big(g.size()), small(g.size()), big2(g.size()), small2(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      big[i] = s.uniform();
      small[i] = big[i] * s.uniform();
      big2[i] = s.uniform();
      small2[i] = big2[i] * s.uniform();
    }
    const auto hi = b_operator(Measure1D::grid(g, big), Measure1D::grid(g, big2));
    const auto lo = b_operator(Measure1D::grid(g, small), Measure1D::grid(g, small2));
    for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(hi.density()[i] >= lo.density()[i] - 1e-12);
  }
}

TEST_CASE("gamma is stationary") {
  SolverSettings s;
  s.output_times = {0.0, 5.0, 10.0};
  const VelocityGrid g = solver_grid(1.0, 0.0, unit, s);
  const auto sol = solve(Measure1D::gaussian(1.0, g), unit, 10.0, s);
  CHECK(sol.diagnostics().sup_gamma_deviation <= 1e-6);
  CHECK(std::abs(sol.quantile(10.0, 0.5)) < 1e-9);
  CHECK(sol.quantile(10.0, oracle::normal_cdf(1.0)) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(sol.moment(7.0, 4) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("second moment follows the exact law") {
  const auto& sol = two_point_solution();
  CHECK(sol.moment(2 * std::log(2.0), 2) == doctest::Approx(1.5).epsilon(1e-4));
  for (const auto& m : sol.moments())
    REQUIRE(std::abs(m.m2 / second_moment_exact(2.0, unit, m.t) - 1.0) <= 1e-4);
  CHECK(sol.diagnostics().max_m2_relative_error <= 1e-4);
}

TEST_CASE("fourth moment matches the closed moment hierarchy") {
  const auto& sol = two_point_solution();
  for (double t : {0.5, 1.0, 3.0, 6.0}) {
    const double want = oracle::fourth_moment(1, 1, 1, 2.0, 4.0, t);
    CHECK(sol.moment(t, 4) == doctest::Approx(want).epsilon(1e-3));
  }
}

TEST_CASE("slices are probability measures with a valid characteristic function") {
  const auto& sol = two_point_solution();
  CHECK(sol.diagnostics().max_clipped_mass < 1e-6);
  for (const auto& o : sol.outputs()) {
    CHECK(o.continuous.mass() + o.atom_mass == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(o.atom_mass == doctest::Approx(std::exp(-3.0 * o.t)));
    CHECK(std::abs(o.phi.at(0) - std::complex<double>(1.0, 0.0)) < 1e-9);
    for (long j = 1; j < static_cast<long>(o.phi.size()); j += 37) {
      REQUIRE(std::abs(o.phi.at(j)) <= 1.0 + 1e-6);
      REQUIRE(o.phi.at(-j) == std::conj(o.phi.at(j)));
    }
  }
}

TEST_CASE("quantiles are monotone and symmetric") {
  const auto& sol = two_point_solution();
  for (double t : {0.0, 0.25, 1.0, 4.2, 6.0}) {
    double prev = -1e300;
    // midpoints avoid the jumps of the atomic part
    for (int i = 1; i <= 200; ++i) {
      const double u = (i - 0.5) / 200.0;
      const double q = sol.quantile(t, u);
      REQUIRE(q >= prev);
      prev = q;
      REQUIRE(q == doctest::Approx(-sol.quantile(t, 1.0 - u)).epsilon(1e-6).scale(1.0));
    }
    const auto qf = sol.quantile_fn(t);
    CHECK(qf.second_moment() == doctest::Approx(sol.moment(t, 2)).epsilon(1e-4));
  }
  CHECK_THROWS_AS(sol.quantile(6.5, 0.5), std::out_of_range);
}

TEST_CASE("kinetic contraction towards gamma") {
  const auto& sol = two_point_solution();
  const StaticQuantile gamma(Measure1D::gaussian(1.0, sol.grid()).quantile());
  CHECK(kinetic_w2(sol, sol, 1.0) == doctest::Approx(0.0));
  const double w0 = kinetic_w2(sol, gamma, 0.0);
  for (double t : {0.5, 1.0, 3.0, 6.0}) CHECK(kinetic_w2(sol, gamma, t) <= 1.05 * std::exp(-t / 2) * w0);
}

TEST_CASE("serial and parallel kernels agree") {
  SolverSettings s;
  s.half_points = 256;
  s.output_times = {1.0};
  auto par = solve(two_point(), unit, 1.0, s);
  s.serial = true;
  auto ser = solve(two_point(), unit, 1.0, s);
  const auto& a = par.output_at(1.0).phi.phi;
  const auto& b = ser.output_at(1.0).phi.phi;
  REQUIRE(a.size() == b.size());
  for (std::size_t j = 0; j < a.size(); ++j) REQUIRE(a[j] == b[j]);
}

TEST_CASE("second moment drift aborts") {
  SolverSettings s;
  s.half_points = 64;
  s.moment_tolerance = 1e-14;
  CHECK_THROWS_AS(solve(two_point(), unit, 2.0, s), NumericalAbort);
}

TEST_CASE("solution export") {
  SolverSettings s;
  s.half_points = 64;
  s.output_times = {0.0, 1.0};
  const auto sol = solve(two_point(), unit, 1.0, s);
  std::stringstream d, m;
  sol.write_density_csv(d);
  sol.write_moment_csv(m);
  CHECK(d.str().rfind("t,v,density\n", 0) == 0);
  CHECK(m.str().rfind("t,moment2,moment4\n", 0) == 0);
}

TEST_CASE("wild iteration basics") {
  SolverSettings ss;
  ss.half_points = 512;
  const VelocityGrid g = solver_grid(2.0, std::sqrt(2.0), unit, ss);
  WildSettings w;
  w.n_max = 0;
  const auto r0 = wild_iterate(two_point(), unit, 0.5, g, w);
  CHECK(r0.masses[0] == doctest::Approx(std::exp(-1.5)).epsilon(1e-12));
  w.n_max = 12;
  const auto r = wild_iterate(two_point(), unit, 0.5, g, w);
  for (std::size_t n = 1; n < r.masses.size(); ++n) REQUIRE(r.masses[n] >= r.masses[n - 1] - 1e-15);
  CHECK(r.masses.back() <= 1.0 + 1e-9);
  CHECK(r.mass_deficit < 1e-3);
}

TEST_CASE("wild iteration keeps gamma") {
  SolverSettings ss;
  ss.half_points = 512;
  const VelocityGrid g = solver_grid(1.0, 0.0, unit, ss);
  WildSettings w;
  w.n_max = 20;
  const auto gam = Measure1D::gaussian(1.0, g);
  const auto r = wild_iterate(gam, unit, 1.0, g, w);
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) err += std::abs(r.measure.density()[i] - gam.density()[i]) * g.weight(i);
  CHECK(err <= r.mass_deficit + 2e-3);
}

TEST_CASE("quarter theta rule integrates trig monomials") {
  const QuarterRule q(64);
  double c2 = 0, c4 = 0, c2s2 = 0, w = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double c = q.cos[i], s = q.sin(i);
    w += q.weight[i];
    c2 += q.weight[i] * c * c;
    c4 += q.weight[i] * c * c * c * c;
    c2s2 += q.weight[i] * c * c * s * s;
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c2 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(c4 == doctest::Approx(3.0 / 8.0).epsilon(1e-14));
  CHECK(c2s2 == doctest::Approx(1.0 / 8.0).epsilon(1e-14));
}

TEST_CASE("lagrange stencil reproduces polynomials") {
  std::vector<double> f(64);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::pow(static_cast<double>(i), 4);  // even
  for (double x : {0.3, 2.5, 10.1, 40.7}) {
    const auto st = lagrange_stencil(x, 63);
    CHECK(apply_stencil(st, f.data()) == doctest::Approx(std::pow(x, 4)).epsilon(1e-10));
  }
}
