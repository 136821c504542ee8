#include <catch2/catch_amalgamated.hpp>

#include "hardball/simulator.hpp"
#include "test_util.hpp"

using namespace hardball;
using hbtest::convergent_line_state;
using hbtest::kinetic_energy;
using hbtest::momentum;

namespace {

BallSystemState<double> two_balls_head_on() {
  BallSystemState<double> st;
  st.config = BallConfiguration<double>(3, 2);
  st.config.coord(2, 0) = 3.0;
  st.velocities = {1, 0, 0, -1, 0, 0};
  return st;
}

}  // namespace

TEST_CASE("next collision of two approaching balls", "[simulator]") {
  const auto st = two_balls_head_on();
  const auto nc = next_collision(st);
  REQUIRE(nc.has_value());
  CHECK(nc->first == Catch::Approx(1.0));
  CHECK(nc->second == IndexPair{1, 2});
}

TEST_CASE("no collision without motion or while receding", "[simulator]") {
  auto st = two_balls_head_on();
  st.velocities.assign(6, 0.0);
  CHECK_FALSE(next_collision(st).has_value());
  st.velocities = {-1, 0, 0, 1, 0, 0};
  CHECK_FALSE(next_collision(st).has_value());
}

TEST_CASE("overlapping balls are rejected", "[simulator]") {
  BallSystemState<double> st;
  st.config = BallConfiguration<double>(3, 2);
  st.config.coord(2, 0) = 0.5;
  st.velocities.assign(6, 0.0);
  CHECK_THROWS_AS(next_collision(st), OverlapError);
}

TEST_CASE("head-on exchange swaps the velocities", "[simulator]") {
  BallSystemState<double> st;
  st.config = BallConfiguration<double>(3, 2);
  st.config.coord(2, 0) = 1.0;
  st.velocities = {2, 0, 0, -1, 0, 0};
  const auto out = apply_elastic(st, {1, 2});
  CHECK(out.velocities == Vec<double>{-1, 0, 0, 2, 0, 0});
}

TEST_CASE("exact exchange conserves momentum and energy with equality", "[simulator]") {
  BallSystemState<Rational> st;
  st.config = BallConfiguration<Rational>(3, 2);
  // contact along a Pythagorean direction keeps everything rational
  st.config.coord(2, 0) = Rational(3, 5);
  st.config.coord(2, 1) = Rational(4, 5);
  st.velocities = {Rational(1, 3), Rational(-2), Rational(5, 7),
                   Rational(0),    Rational(1, 2), Rational(-1, 9)};
  const auto out = apply_elastic(st, {1, 2});
  for (int a = 0; a < 3; ++a)
    CHECK(st.velocities[a] + st.velocities[3 + a] == out.velocities[a] + out.velocities[3 + a]);
  Rational e_before(0), e_after(0);
  for (int k = 0; k < 6; ++k) {
    e_before += st.velocities[k] * st.velocities[k];
    e_after += out.velocities[k] * out.velocities[k];
  }
  CHECK(e_before == e_after);
  CHECK(out.velocities != st.velocities);
}

TEST_CASE("grazing contact leaves the velocities alone", "[simulator]") {
  BallSystemState<double> st;
  st.config = BallConfiguration<double>(2, 2);
  st.config.coord(2, 0) = 1.0;
  st.velocities = {0, 1, 0, -1};  // relative velocity orthogonal to the contact line
  const auto out = apply_elastic(st, {1, 2});
  CHECK(out.velocities == st.velocities);
  CHECK_THROWS_AS(apply_elastic(two_balls_head_on(), IndexPair{1, 2}), PreconditionError);
}

TEST_CASE("velocity jump equals the configuration-space reflection", "[simulator]") {
  Rng rng(908);
  for (int trial = 0; trial < 50; ++trial) {
    // two balls in contact with random velocities, embedded among bystanders
    BallSystemState<double> st;
    st.config = BallConfiguration<double>(3, 3);
    Vec<double> dir(3);
    for (auto& x : dir) x = rng.uniform_pm<double>(1.0);
    const double len = norm(dir);
    if (len < 1e-3) continue;
    for (int a = 0; a < 3; ++a) st.config.coord(2, a) = dir[a] / len;
    st.config.coord(3, 1) = 5.0;
    st.velocities.resize(9);
    for (auto& v : st.velocities) v = rng.uniform_pm<double>(1.0);
    st.config.certified_contacts = {{1, 2}};

    const auto out = apply_elastic(st, {1, 2});
    const Vec<double> nu = wall_normal(st.config, 1, 2);
    Vec<double> expect = st.velocities;
    axpy(-2.0 * dot(st.velocities, nu), nu, expect);
    for (int k = 0; k < 9; ++k) CHECK(std::abs(out.velocities[k] - expect[k]) <= 1e-12);
  }
}

TEST_CASE("momentum and energy are conserved through every event", "[simulator]") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + int(rng.next_u64() % 3);
    BallSystemState<double> st;
    st.config = BallConfiguration<double>(3, n);
    for (int i = 1; i <= n; ++i)
      for (int a = 0; a < 3; ++a) st.config.coord(i, a) = 2.2 * (i - 1) + 0.4 * rng.unit<double>();
    st.velocities.resize(3 * n);
    for (auto& v : st.velocities) v = rng.uniform_pm<double>(1.0);
    const double e0 = kinetic_energy(st);
    const Vec<double> p0 = momentum(st);

    SimulationResult<double> res;
    try {
      res = simulate(st, 50.0, 64);
    } catch (const SingularEventError&) {
      continue;
    }
    const double e1 = kinetic_energy(res.final_state);
    const Vec<double> p1 = momentum(res.final_state);
    CHECK(std::abs(e1 - e0) <= 1e-12 * std::max(1.0, e0));
    for (int a = 0; a < 3; ++a) CHECK(std::abs(p1[a] - p0[a]) <= 1e-12);
    // per-event conservation
    for (const auto& e : res.log.events) {
      CHECK(std::abs(norm_sq(e.v_post) - norm_sq(e.v_pre)) <= 1e-12 * std::max(1.0, norm_sq(e.v_pre)));
    }
  }
}

TEST_CASE("three balls on a line", "[simulator]") {
  BallSystemState<double> st;
  st.config = BallConfiguration<double>(1, 3);
  st.config.coord(1, 0) = -3.5;
  st.config.coord(2, 0) = 0.0;
  st.config.coord(3, 0) = 3.0;
  st.velocities = {1, 0, -1};
  const auto res = simulate(st, 1e30, 100);
  REQUIRE(res.log.events.size() == 3);
  CHECK(res.log.events[0].time == Catch::Approx(2.0));
  CHECK(res.log.events[0].pair == IndexPair{2, 3});
  CHECK(res.log.events[1].time == Catch::Approx(2.25));
  CHECK(res.log.events[1].pair == IndexPair{1, 2});
  CHECK(res.log.events[2].time == Catch::Approx(2.5));
  CHECK(res.log.events[2].pair == IndexPair{2, 3});
  CHECK(res.log.end == BallEventLog<double>::End::free_flight);
}

TEST_CASE("lonely ball and a single head-on event", "[simulator]") {
  BallSystemState<double> one;
  one.config = BallConfiguration<double>(3, 1);
  one.velocities = {1, 2, 3};
  CHECK(simulate(one, 1e30, 10).log.events.empty());

  const auto res = simulate(two_balls_head_on(), 1e30, 10);
  CHECK(res.log.events.size() == 1);
}

TEST_CASE("the horizon stops the clock mid-flight", "[simulator]") {
  auto st = two_balls_head_on();
  const auto res = simulate(st, 0.25, 10);
  CHECK(res.log.events.empty());
  CHECK(res.log.end == BallEventLog<double>::End::horizon);
  CHECK(res.final_state.time == 0.25);
  CHECK(res.final_state.config.coord(1, 0) == Catch::Approx(0.25));
}

TEST_CASE("convergent line data meets the one-dimensional maximum", "[simulator]") {
  for (int n : {3, 4, 5}) {
    const auto res = simulate(convergent_line_state(n, 11 + n), 1e30, 1000);
    CHECK((long long)res.log.events.size() == (long long)n * (n - 1) / 2);
  }
}

TEST_CASE("event times increase and gaps stay clear of contact", "[simulator]") {
  const auto res = simulate(convergent_line_state(5, 77), 1e30, 1000);
  const auto& ev = res.log.events;
  for (std::size_t k = 1; k < ev.size(); ++k) CHECK(ev[k].time > ev[k - 1].time);
  // segment midpoints keep every pair at distance >= 1 - 1e-9
  BallSystemState<double> st = convergent_line_state(5, 77);
  for (std::size_t k = 0; k < ev.size(); ++k) {
    const double t_mid = (k == 0 ? st.time : ev[k - 1].time) / 2 + ev[k].time / 2;
    BallSystemState<double> probe = st;
    // rebuild state at the segment start
    if (k > 0) {
      probe.config.centers = ev[k - 1].positions;
      probe.velocities = ev[k - 1].v_post;
      probe.time = ev[k - 1].time;
    }
    const double dt = t_mid - probe.time;
    for (std::size_t c = 0; c < probe.config.centers.size(); ++c)
      probe.config.centers[c] += dt * probe.velocities[c];
    for (int i = 1; i <= 5; ++i)
      for (int j = i + 1; j <= 5; ++j)
        CHECK(probe.config.pair_distance_sq(i, j) >= (1.0 - 1e-9) * (1.0 - 1e-9));
  }
}

TEST_CASE("reversing the velocities replays the history backwards", "[simulator]") {
  BallSystemState<double> st;
  st.config = BallConfiguration<double>(2, 3);
  st.config.coord(1, 0) = -3;
  st.config.coord(1, 1) = 0.1;
  st.config.coord(2, 1) = -0.05;
  st.config.coord(3, 0) = 3.2;
  st.config.coord(3, 1) = 0.07;
  st.velocities = {1, 0.02, 0.1, -0.01, -1, 0.03};
  const auto fwd = simulate(st, 1e30, 100);
  REQUIRE(fwd.log.events.size() == 3);

  auto back_state = fwd.final_state;
  const double t_cut = back_state.time;
  back_state.time = 0;
  for (auto& v : back_state.velocities) v = -v;
  const auto back = simulate(back_state, 1e30, 100);
  REQUIRE(back.log.events.size() == fwd.log.events.size());
  const std::size_t n = fwd.log.events.size();
  for (std::size_t k = 0; k < n; ++k)
    CHECK(std::abs(back.log.events[k].time - (t_cut - fwd.log.events[n - 1 - k].time)) <= 1e-9);
}

TEST_CASE("realized states start collision free and follow the cone data", "[simulator]") {
  // two balls, single-wall cone trajectory
  BallConfiguration<double> q(3, 2);
  q.coord(2, 0) = 1.0;
  q.certified_contacts = {{1, 2}};
  const auto cone = tangent_cone(q);

  PLTrajectory<double> f;
  f.t_start = -2;
  f.t_end = 2;
  f.start_values = {2.0};
  f.start_slopes = {-1.0};
  f.events.push_back({0.0, {1.0}});
  const auto lifted = lift_from_gram(cone, f);

  const auto state = realize_from_cone(q, lifted, 8.0);
  for (int i = 1; i <= 2; ++i)
    for (int j = i + 1; j <= 2; ++j) CHECK(state.config.pair_distance_sq(i, j) > 1.0);
  // velocity direction matches the cone velocity blockwise
  const double speed = norm(lifted.v0);
  for (int k = 0; k < 6; ++k)
    CHECK(std::abs(state.velocities[k] - lifted.v0[k] / speed) <= 1e-12);

  const auto res = simulate(state, 1e30, 8);
  REQUIRE(res.log.events.size() == 1);
  CHECK(res.log.events[0].pair == IndexPair{1, 2});

  // the homothety limit puts the start at the contact configuration
  const auto tight = realize_from_cone(q, lifted, 1.1e12);
  for (std::size_t k = 0; k < q.centers.size(); ++k)
    CHECK(std::abs(tight.config.centers[k] - q.centers[k]) <= 1e-11);
}

TEST_CASE("full verification at small ball counts", "[simulator][pipeline]") {
  for (int n : {3, 4}) {
    const auto rep = verify_exponential<double>(n);
    INFO(rep.failure);
    CHECK(rep.match);
    CHECK(rep.observed == rep.n_predicted);
    CHECK(rep.observed >= rep.bound);
    CHECK(rep.wall_sequence.size() == std::size_t(rep.n_predicted));
  }
}

TEST_CASE("verification rejects tiny systems", "[simulator]") {
  CHECK_THROWS_AS(verify_exponential<double>(2), PreconditionError);
}
