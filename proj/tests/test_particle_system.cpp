#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "kaclab/particle_system.hpp"
#include "kaclab/replicas.hpp"

using namespace kaclab;
using std::numbers::pi;

TEST_CASE("apply_event examples") {
  VelocityEnsemble e{0.0, {1, 1, 7, 2}};
  auto same = apply_event(e, EventRecord::kac(0.5, 0.3, 1.7, Angle(0)));
  CHECK(same.velocities == e.velocities);
  CHECK(same.time == 0.5);
  auto therm = apply_event(e, EventRecord::thermostat(0.1, 2, Angle(pi / 2), 0.0));
  CHECK(std::abs(therm.velocities[2]) < 1e-15);
  auto rot = apply_event(e, EventRecord::kac(0.1, 0.0, 1.0, Angle(pi / 4)));
  CHECK(std::abs(rot.velocities[0]) < 1e-15);
  CHECK(rot.velocities[1] == doctest::Approx(std::sqrt(2.0)));
  CHECK(rot.velocities[2] == 7.0);
}

TEST_CASE("apply_event errors") {
  VelocityEnsemble e{1.0, {1, 2, 3}};
  CHECK_THROWS_AS(apply_event(e, EventRecord::kac(0.5, 0.0, 1.0, Angle(0))), std::invalid_argument);
  CHECK_THROWS_AS(apply_event(e, EventRecord::kac(2.0, 0.0, 3.5, Angle(0))), std::invalid_argument);
  CHECK_THROWS_AS(apply_event(e, EventRecord::thermostat(2.0, 3, Angle(0), 0)), std::invalid_argument);
}

TEST_CASE("energy is conserved at every event without a thermostat") {
  RandomStream s(1, 1);
  VelocityEnsemble e{0.0, InitialCondition::uniform(-2, 3).sample(200, s)};
  const double e0 = moment(e, 2);
  SimulationHooks hooks;
  std::size_t events = 0;
  hooks.on_event = [&](const EventRecord&, const VelocityEnsemble& x) {
    ++events;
    REQUIRE(std::abs(moment(x, 2) - e0) <= 1e-12 * e0);
  };
  simulate(e, ModelParams{2.0, 0.0, 1.0}, 5.0, s, hooks);
  CHECK(events > 1000);
}

TEST_CASE("t_end equal to the start time leaves the state alone") {
  RandomStream s(1, 1);
  VelocityEnsemble e{2.0, {1, 2, 3}};
  const auto out = simulate(e, ModelParams{}, 2.0, s);
  CHECK(out.velocities == e.velocities);
}

TEST_CASE("samples use the state as of the last event") {
  RandomStream s(5, 5);
  VelocityEnsemble e{0.0, {1, -1, 2, -2}};
  std::vector<std::pair<double, std::vector<double>>> log;
  SimulationHooks hooks;
  hooks.on_event = [&](const EventRecord& ev, const VelocityEnsemble& x) { log.push_back({ev.time, x.velocities}); };
  std::vector<std::vector<double>> samples;
  hooks.sample_times = {0.0, 0.3, 0.7, 1.0};
  hooks.on_sample = [&](std::size_t, const VelocityEnsemble& x) { samples.push_back(x.velocities); };
  simulate(e, ModelParams{1, 1, 1}, 1.0, s, hooks);
  REQUIRE(samples.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<double> expect = e.velocities;
    for (const auto& [t, v] : log)
      if (t <= hooks.sample_times[k]) expect = v;
    CHECK(samples[k] == expect);
  }
}

TEST_CASE("thermostat alone relaxes zero velocities to temperature") {
  RandomStream s(2, 2);
  VelocityEnsemble e{0.0, std::vector<double>(4000, 0.0)};
  const auto out = simulate(e, ModelParams{0.0, 1.0, 1.0}, 20.0, s);
  // e(20) = 1 - e^{-10}; sd of the mean of v^2 is sqrt(2/N)
  CHECK(std::abs(moment(out, 2) - (1 - std::exp(-10.0))) < 4 * std::sqrt(2.0 / 4000));
}

TEST_CASE("gaussian start is stationary in moments") {
  const std::size_t reps = 40, n = 500;
  const ModelParams p{1, 1, 1};
  auto per = run_replicas(reps, 0, [&](std::size_t r) {
    RandomStream s(3, replica_stream_id("stat", r));
    VelocityEnsemble e{0.0, InitialCondition::gaussian(1.0).sample(n, s)};
    auto out = simulate(e, p, 3.0, s);
    return std::vector<double>{moment(e, 2), moment(e, 4), moment(out, 2), moment(out, 4)};
  });
  for (int m = 0; m < 2; ++m) {
    std::vector<double> diff;
    for (const auto& x : per) diff.push_back(x[2 + m] - x[m]);
    const auto st = mean_stderr(diff);
    CHECK(std::abs(st.mean) <= 3 * st.stderr_);
  }
}

TEST_CASE("synchronous pair") {
  RandomStream s(7, 7);
  const ModelParams p{1, 1, 1};
  VelocityEnsemble a{0.0, InitialCondition::two_point(1.5).sample(50, s)};
  auto same = simulate_synchronous_pair(a, a, p, 3.0, s, {0.0, 1.0, 3.0});
  for (double h : same.h) CHECK(h == 0.0);

  // one thermostat jump at theta = pi/2 kills the gap of that coordinate up to cos(pi/2) rounding
  VelocityEnsemble x{0.0, {1.0, 2.0}}, y{0.0, {-1.0, 5.0}};
  auto xa = apply_event(x, EventRecord::thermostat(0.1, 0, Angle(pi / 2), 0.7));
  auto ya = apply_event(y, EventRecord::thermostat(0.1, 0, Angle(pi / 2), 0.7));
  CHECK(std::abs(xa.velocities[0] - ya.velocities[0]) <= 1e-15);

  CHECK_THROWS(simulate_synchronous_pair(x, VelocityEnsemble{0.0, {1, 2, 3}}, p, 1.0, s, {}));
}

TEST_CASE("pair gap decays in expectation at rate mu/2") {
  for (double mu : {1.0, 2.0}) {
    const ModelParams p{1, mu, 1};
    const std::size_t reps = 60, n = 300;
    auto per = run_replicas(reps, 0, [&](std::size_t r) {
      RandomStream s(11, replica_stream_id("pair", r));
      VelocityEnsemble a{0.0, InitialCondition::two_point(std::sqrt(2.0)).sample(n, s)};
      VelocityEnsemble b{0.0, InitialCondition::gaussian(1.0).sample(n, s)};
      double h0 = 0;
      for (std::size_t i = 0; i < n; ++i) h0 += std::pow(a.velocities[i] - b.velocities[i], 2);
      h0 /= static_cast<double>(n);
      auto tr = simulate_synchronous_pair(a, b, p, 2.0, s, {2.0});
      return tr.h[0] / (h0 * std::exp(-mu));
    });
    const auto st = mean_stderr(per);
    CHECK(std::abs(st.mean - 1.0) <= 3 * st.stderr_);
  }
}

TEST_CASE("empirical measure and moments") {
  const auto m = empirical_measure(VelocityEnsemble{0.0, {0, 0}});
  CHECK(m.positions().size() == 1);
  CHECK(m.weights()[0] == doctest::Approx(1.0));
  const auto pm = empirical_measure(VelocityEnsemble{0.0, {1, -1}});
  CHECK(pm.positions() == std::vector<double>{-1, 1});
  CHECK(pm.weights()[0] == doctest::Approx(0.5));
  CHECK(moment(VelocityEnsemble{0.0, {0, 0}}, 2) == 0.0);
  CHECK(moment(VelocityEnsemble{0.0, {1, 1}}, 2) == 1.0);
  CHECK(moment(VelocityEnsemble{0.0, {1, 2, 3}}, 2) == doctest::Approx(14.0 / 3.0));
  VelocityEnsemble e{0.0, {0.3, -2.0, 1.1}};
  CHECK(empirical_measure(e).abs_moment(2) == doctest::Approx(moment(e, 2)));
}

TEST_CASE("ensemble csv round trip") {
  VelocityEnsemble e{0.0, {0.125, -3.5, 2.0}};
  std::stringstream ss;
  write_ensemble_csv(ss, e);
  CHECK(ss.str().rfind("v\n", 0) == 0);
  CHECK(read_ensemble_csv(ss).velocities == e.velocities);
}

TEST_CASE("initial conditions") {
  RandomStream s(1, 2);
  const auto tp = InitialCondition::two_point(2.0).sample(1000, s);
  for (double v : tp) REQUIRE(std::abs(v) == 2.0);
  CHECK(InitialCondition::two_point(2.0).second_moment() == 4.0);
  CHECK(InitialCondition::uniform(-1, 2).second_moment() == doctest::Approx(1.0));
  CHECK(InitialCondition::gaussian(3.0).second_moment() == 3.0);
  CHECK_THROWS(VelocityEnsemble{0.0, {1.0}}.validate());
}
