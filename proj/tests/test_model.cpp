#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "kaclab/model.hpp"

using namespace kaclab;
using std::numbers::pi;

TEST_CASE("kac_rotate examples") {
  auto [a, b] = kac_rotate(1, 0, Angle(pi / 2));
  CHECK(a == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(b == doctest::Approx(1.0));
  auto [c, d] = kac_rotate(3, 4, Angle(pi));
  CHECK(c == doctest::Approx(-3.0));
  CHECK(d == doctest::Approx(-4.0));
  CHECK(c * c + d * d == doctest::Approx(25.0));
  auto [e, f] = kac_rotate(1, 1, Angle(pi / 4));
  CHECK(std::abs(e) < 1e-15);
  CHECK(f == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("thermostat_rotate examples") {
  CHECK(thermostat_rotate(5, 123.0, Angle(0)) == 5.0);
  CHECK(thermostat_rotate(5, 2, Angle(pi / 2)) == doctest::Approx(-2.0));
  CHECK(std::abs(thermostat_rotate(1, 1, Angle(pi / 4))) < 1e-15);
}

TEST_CASE("kac rotation preserves energy to rounding") {
  RandomStream s(1, 2);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int i = 0; i < 100000; ++i) {
    const double v = s.normal(0, 3), w = s.normal(0, 3);
    const auto [a, b] = kac_rotate(v, w, Angle::uniform(s));
    const double e = v * v + w * w;
    REQUIRE(std::abs(a * a + b * b - e) <= 8 * eps * e);
  }
}

TEST_CASE("angle domain") {
  CHECK_THROWS_AS(Angle(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(static_cast<void>(Angle(two_pi)), std::invalid_argument);
  CHECK_NOTHROW(Angle(0.0));
  RandomStream s(3, 3);
  for (int i = 0; i < 10000; ++i) {
    const double t = Angle::uniform(s).radians();
    REQUIRE(t >= 0.0);
    REQUIRE(t < two_pi);
  }
}

TEST_CASE("rotated pair members have the same law") {
  // v cos - v* sin and v cos + v* sin with v = 1, v* = 2: compare the first
  // three moments of |.| between the two samples
  RandomStream s(8, 1);
  const int n = 200000;
  double a1 = 0, a2 = 0, b1 = 0, b2 = 0;
  for (int i = 0; i < n; ++i) {
    const Angle t = Angle::uniform(s);
    const double x = t.cos() - 2 * t.sin();
    const double y = t.cos() + 2 * t.sin();
    a1 += x;
    a2 += x * x;
    b1 += y;
    b2 += y * y;
  }
  // Var(X) = 2.5, Var(X^2) < 20
  CHECK(std::abs(a1 / n - b1 / n) < 5 * std::sqrt(2 * 2.5 / n));
  CHECK(std::abs(a2 / n - b2 / n) < 5 * std::sqrt(2 * 20.0 / n));
}

TEST_CASE("next_event rejects a single particle") {
  RandomStream s(1, 1);
  CHECK_THROWS_AS(next_event(ModelParams{1, 1, 1}, 1, 0.0, s), std::invalid_argument);
}

TEST_CASE("no thermostat events when mu is zero") {
  RandomStream s(1, 1);
  double t = 0;
  for (int i = 0; i < 5000; ++i) {
    const auto e = next_event(ModelParams{1, 0, 1}, 10, t, s);
    REQUIRE(e.kind == EventKind::Kac);
    t = e.time;
  }
}

TEST_CASE("event statistics") {
  RandomStream s(2, 5);
  const ModelParams p{1, 1, 1};
  const std::size_t n = 100;
  const int draws = 200000;
  double t = 0, gaps = 0, w2 = 0;
  int kac = 0, therm = 0;
  for (int i = 0; i < draws; ++i) {
    const auto e = next_event(p, n, t, s);
    REQUIRE(e.time > t);
    gaps += e.time - t;
    t = e.time;
    if (e.kind == EventKind::Kac) {
      ++kac;
      REQUIRE(e.first() != e.second());
      REQUIRE(e.xi >= 0.0);
      REQUIRE(e.zeta < static_cast<double>(n));
    } else {
      ++therm;
      REQUIRE(e.particle < n);
      w2 += e.w * e.w;
    }
  }
  // mean gap 1/200 with sd 1/200/sqrt(draws)
  CHECK(std::abs(gaps / draws - 1.0 / 200) < 3 * (1.0 / 200) / std::sqrt(draws));
  CHECK(std::abs(kac / double(draws) - 0.5) < 3 * std::sqrt(0.25 / draws));
  CHECK(std::abs(w2 / therm - 1.0) < 5 * std::sqrt(2.0 / therm));
}

TEST_CASE("equal streams give identical event sequences") {
  RandomStream a(9, 9), b(9, 9);
  double ta = 0, tb = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto ea = next_event(ModelParams{1, 2, 3}, 7, ta, a);
    const auto eb = next_event(ModelParams{1, 2, 3}, 7, tb, b);
    REQUIRE(ea == eb);
    ta = ea.time;
    tb = eb.time;
  }
}

TEST_CASE("kac labels are uniform over distinct ordered pairs") {
  RandomStream s(4, 4);
  const std::size_t n = 4;
  std::vector<int> count(n * n, 0);
  const int draws = 120000;
  for (int i = 0; i < draws; ++i) {
    const auto [xi, zeta] = sample_kac_labels(n, s);
    count[static_cast<std::size_t>(xi) * n + static_cast<std::size_t>(zeta)]++;
  }
  const double expect = draws / 12.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) CHECK(count[i * n + j] == 0);
      else CHECK(std::abs(count[i * n + j] - expect) < 5 * std::sqrt(expect));
    }
}

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(ModelParams{1, 0, 1}.validate());
  CHECK_NOTHROW(ModelParams{0, 1, 1}.validate());
  CHECK_THROWS(ModelParams{0, 0, 1}.validate());
  CHECK_THROWS(ModelParams{-1, 1, 1}.validate());
  CHECK_THROWS(ModelParams{1, 1, 0}.validate());
  CHECK(ModelParams{1, 1, 1}.loss_rate() == 3.0);
}
