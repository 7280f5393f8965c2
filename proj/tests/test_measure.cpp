#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "kaclab/measure.hpp"
#include "kaclab/random.hpp"
#include "oracles.hpp"

using namespace kaclab;

TEST_CASE("atoms are sorted and massed") {
  const auto m = Measure1D::atoms({2, -1, 0}, {0.5, 0.25, 0.25});
  CHECK(m.positions() == std::vector<double>{-1, 0, 2});
  CHECK(m.mass() == doctest::Approx(1.0));
  CHECK(m.cdf(-1) == doctest::Approx(0.25));
  CHECK(m.cdf(-1.0001) == 0.0);
  CHECK(m.cdf(1.5) == doctest::Approx(0.5));
  CHECK(m.abs_moment(2) == doctest::Approx(0.25 + 2.0));
  CHECK(m.moment(1) == doctest::Approx(-0.25 + 1.0));
  CHECK_THROWS(Measure1D::atoms({0}, {-1}));
}

TEST_CASE("gaussian grid law") {
  const VelocityGrid g{8.0, 2048};
  const auto m = Measure1D::gaussian(1.0, g);
  CHECK(m.mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.abs_moment(2) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(m.abs_moment(4) == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(m.cdf(1.0) == doctest::Approx(oracle::normal_cdf(1.0)).epsilon(1e-5));
  const auto q = m.quantile();
  CHECK(std::abs(q(0.5)) < 1e-9);
  CHECK(q(oracle::normal_cdf(1.0)) == doctest::Approx(1.0).epsilon(1e-4));
  for (double u : {0.01, 0.2, 0.37, 0.49}) CHECK(q(u) == doctest::Approx(-q(1 - u)).epsilon(1e-9));
  CHECK(q.second_moment() == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("node masses conserve mass and first moment") {
  const VelocityGrid g{4.0, 64};
  RandomStream s(1, 1);
  std::vector<double> x, w;
  for (int i = 0; i < 50; ++i) {
    x.push_back(s.uniform(-3.9, 3.9));
    w.push_back(s.uniform());
  }
  const auto m = Measure1D::atoms(x, w);
  const auto nm = m.node_masses(g);
  double mass = 0, first = 0;
  for (std::size_t i = 0; i < nm.size(); ++i) {
    REQUIRE(nm[i] >= 0.0);
    mass += nm[i];
    first += nm[i] * g.at(i);
  }
  CHECK(mass == doctest::Approx(m.mass()).epsilon(1e-13));
  CHECK(first == doctest::Approx(m.moment(1)).epsilon(1e-12));
}

TEST_CASE("quantile of atoms takes the leftmost tie") {
  const auto q = Measure1D::atoms({-1, 1}, {0.5, 0.5}).quantile();
  CHECK(q(0.25) == -1.0);
  CHECK(q(0.5) == -1.0);
  CHECK(q(0.75) == 1.0);
  CHECK(q.mean() == doctest::Approx(0.0));
  CHECK(q.second_moment() == doctest::Approx(1.0));
}

TEST_CASE("closed-form quantile distances") {
  CHECK(w2_squared(QuantileFn::point_mass(0), QuantileFn::point_mass(3)) == doctest::Approx(9.0));
  CHECK(w2_squared(QuantileFn::uniform(0, 1), QuantileFn::uniform(0, 1)) == doctest::Approx(0.0));
  // shift of U[0,1] by 2
  CHECK(w2_squared(QuantileFn::uniform(0, 1), QuantileFn::uniform(2, 3)) == doctest::Approx(4.0));
  // U[0,2] vs U[0,1]: int (2u - u)^2 = 1/3
  CHECK(w2_squared(QuantileFn::uniform(0, 2), QuantileFn::uniform(0, 1)) == doctest::Approx(1.0 / 3.0));
  // Gaussians of sd a and b: (a - b)^2
  const VelocityGrid g{12.0, 4096};
  const double w = w2_squared(Measure1D::gaussian(1.0, g).quantile(), Measure1D::gaussian(4.0, g).quantile());
  CHECK(w == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("empirical against quantile") {
  const std::vector<double> a{0.0, 1.0};
  CHECK(w2_sorted_quantile(a, QuantileFn::uniform(0, 1)) == doctest::Approx(1.0 / 12.0));
  const std::vector<double> b{-1.0, 1.0};
  CHECK(w2_sorted_quantile(b, QuantileFn::point_mass(0)) == doctest::Approx(1.0));
}

TEST_CASE("measure csv round trip") {
  const auto m = Measure1D::atoms({0.5, -0.25}, {0.3, 0.7});
  std::stringstream ss;
  write_measure_csv(ss, m);
  const auto r = read_measure_csv(ss);
  CHECK(r.positions() == m.positions());
  CHECK(r.weights() == m.weights());
  const VelocityGrid g{2.0, 8};
  const auto gm = Measure1D::gaussian(0.5, g);
  std::stringstream gs;
  write_measure_csv(gs, gm);
  const auto back = read_measure_csv(gs);
  CHECK(back.velocity_grid() == g);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(back.density()[i] == doctest::Approx(gm.density()[i]).epsilon(1e-11));
}

TEST_CASE("symmetrized and scaled") {
  const auto m = Measure1D::atoms({1.0, 3.0}, {1.0, 1.0});
  const auto s = m.symmetrized();
  CHECK(s.mass() == doctest::Approx(2.0));
  CHECK(s.moment(1) == doctest::Approx(0.0));
  CHECK(m.scaled(3).mass() == doctest::Approx(6.0));
}
