#include <catch2/catch_amalgamated.hpp>

#include "hardball/cone_billiard.hpp"
#include "test_util.hpp"

using namespace hardball;

namespace {

PolyhedralCone<double> orthant(int m) {
  PolyhedralCone<double> cone;
  cone.ambient = m;
  for (int i = 0; i < m; ++i) {
    Vec<double> nu(m, 0.0);
    nu[i] = 1.0;
    cone.normals.push_back(nu);
  }
  cone.gram = Mat<double>::identity(m);
  return cone;
}

}  // namespace

TEST_CASE("single wall reflection", "[cone]") {
  const auto cone = orthant(1);
  const auto traj = simulate_cone(cone, {2.0}, {-1.0}, 8);
  REQUIRE(traj.events.size() == 1);
  CHECK(traj.events[0].time == Catch::Approx(2.0));
  CHECK(traj.events[0].v_post[0] == Catch::Approx(1.0));
  CHECK(traj.termination == ConeTrajectory<double>::Termination::escape);
}

TEST_CASE("receding start escapes without events", "[cone]") {
  const auto traj = simulate_cone(orthant(3), {1.0, 1.0, 1.0}, {0.5, 0.2, 0.0}, 8);
  CHECK(traj.events.empty());
}

TEST_CASE("start on a wall is rejected", "[cone]") {
  CHECK_THROWS_AS(simulate_cone(orthant(2), {0.0, 1.0}, {0.5, -1.0}, 8), PreconditionError);
}

TEST_CASE("diagonal corner hit terminates as singular", "[cone]") {
  CHECK_THROWS_AS(simulate_cone(orthant(2), {1.0, 1.0}, {-1.0, -1.0}, 8), SingularEventError);
}

TEST_CASE("right-angled orthant never exceeds one event per wall", "[cone]") {
  Rng rng(501);
  for (int m : {2, 3, 5, 8}) {
    const auto cone = orthant(m);
    for (int trial = 0; trial < 250; ++trial) {
      Vec<double> x(m), v(m);
      for (int i = 0; i < m; ++i) {
        x[i] = 0.1 + rng.unit<double>();
        v[i] = rng.uniform_pm<double>(1.0);
      }
      const auto traj = simulate_cone(cone, x, v, m + 4);
      CHECK((long long)traj.events.size() <= m);
    }
  }
}

TEST_CASE("energy is conserved at every reflection", "[cone]") {
  const auto ex = build_right_angle_example<double>(6, 0.1);
  const auto traj = simulate_cone(ex.cone, ex.x0, ex.v0, (1 << 6) + 4, ex.t0);
  const double speed0 = norm(traj.v0);
  for (const auto& e : traj.events) {
    CHECK(std::abs(norm(e.v_post) / norm(e.v_pre) - 1.0) <= 1e-12);
    CHECK(std::abs(norm(e.v_post) / speed0 - 1.0) <= 1e-10);
    // reflection law residual
    const int w = e.wall - 1;
    Vec<double> expect = e.v_pre;
    axpy(-2.0 * dot(e.v_pre, ex.cone.normals[w]), ex.cone.normals[w], expect);
    for (int i = 0; i < ex.cone.ambient; ++i)
      CHECK(std::abs(expect[i] - e.v_post[i]) <= 1e-12 * std::max(1.0, std::abs(e.v_post[i])));
  }
}

TEST_CASE("doubling cone doubles the collision count", "[cone]") {
  for (int m = 1; m <= 7; ++m) {
    const auto ex = build_right_angle_example<double>(m, 0.1);
    CHECK(ex.cone.faces() == m);
    const auto traj = simulate_cone(ex.cone, ex.x0, ex.v0, (1LL << m) + 8, ex.t0);
    CHECK((long long)traj.events.size() == (1LL << m) - 1);
    CHECK(traj.wall_sequence() == ex.wall_sequence);
  }
}

TEST_CASE("doubling cone face angles stay near the right angle", "[cone]") {
  for (double eps : {0.3, 0.1, 0.02}) {
    const auto ex = build_right_angle_example<double>(10, eps);
    for (int i = 0; i < 10; ++i) {
      CHECK(std::abs(norm(ex.cone.normals[i]) - 1.0) <= 1e-12);
      for (int j = i + 1; j < 10; ++j) CHECK(std::abs(ex.cone.gram(i, j)) < std::sin(eps));
    }
  }
  CHECK_THROWS_AS(build_right_angle_example<double>(3, 1.0), PreconditionError);
}

TEST_CASE("face distances validate against the cone Gram", "[cone]") {
  const auto ex = build_right_angle_example<double>(5, 0.1);
  const auto traj = simulate_cone(ex.cone, ex.x0, ex.v0, (1 << 5) + 4, ex.t0);
  const auto f = gram_coordinates(ex.cone, traj);
  const auto rep = validate<double>(f, gram_as_matrix(ex.cone), TrajectoryKind::genuine, 1e-10);
  INFO(rep.message);
  CHECK(rep.pass);
  CHECK(rep.collisions == 31);
}

TEST_CASE("face distances of a resting point are constant", "[cone]") {
  ConeTrajectory<double> still;
  still.t0 = 0;
  still.t_end = 1;
  still.x0 = {0.5, 2.0, 1.0};
  still.v0 = {0.0, 0.0, 0.0};
  const auto f = gram_coordinates(orthant(3), still);
  CHECK(f.start_values == Vec<double>{0.5, 2.0, 1.0});
  CHECK(f.start_slopes == Vec<double>(3, 0.0));
}

TEST_CASE("rank-deficient normals are rejected", "[cone]") {
  PolyhedralCone<double> bad;
  bad.ambient = 2;
  bad.normals = {{1.0, 0.0}, {1.0, 0.0}};
  bad.gram = Mat<double>(2, 2, 1.0);
  ConeTrajectory<double> t;
  t.t0 = 0;
  t.t_end = 1;
  t.x0 = {1.0, 1.0};
  t.v0 = {0.0, 0.0};
  CHECK_THROWS_AS(gram_coordinates(bad, t), PreconditionError);
}

TEST_CASE("lift inverts the face distances", "[cone]") {
  const auto ex = build_right_angle_example<double>(4, 0.1);
  const auto traj = simulate_cone(ex.cone, ex.x0, ex.v0, (1 << 4) + 4, ex.t0);
  const auto f = gram_coordinates(ex.cone, traj);
  const auto lifted = lift_from_gram(ex.cone, f);
  REQUIRE(lifted.events.size() == traj.events.size());
  for (std::size_t k = 0; k < traj.events.size(); ++k) {
    CHECK(lifted.events[k].wall == traj.events[k].wall);
    for (int i = 0; i < ex.cone.ambient; ++i)
      CHECK(std::abs(lifted.events[k].pos[i] - traj.events[k].pos[i]) <=
            1e-10 * std::max(1.0, std::abs(traj.events[k].pos[i])));
  }
}

TEST_CASE("single zigzag lifts to the half line", "[cone]") {
  PLTrajectory<double> f;
  f.t_start = -2;
  f.t_end = 2;
  f.start_values = {2.0};
  f.start_slopes = {-1.0};
  f.events.push_back({0.0, {1.0}});
  const auto lifted = lift_from_gram(orthant(1), f);
  REQUIRE(lifted.events.size() == 1);
  CHECK(lifted.x0[0] == Catch::Approx(2.0));
  CHECK(lifted.v0[0] == Catch::Approx(-1.0));
  CHECK(lifted.events[0].v_post[0] == Catch::Approx(1.0));
}

TEST_CASE("trajectories transport through any realizing cone", "[cone]") {
  // synthetic cone whose Gram equals the rescaled matrix; the lifted
  // trajectory then replays inside it, event for event
  const int m = 4;
  const auto built = build_inductive(m);
  const auto a = build_Am<Rational>(m);
  const auto genuine = perturb_to_genuine<double, Rational>(built.trajectory, a, 1e-9, 11);
  Vec<double> lambda(m);
  double cur = 1;
  for (int i = 0; i < m; ++i, cur /= 8) lambda[i] = cur;
  const auto at = build_Atilde<double>(m, lambda);
  const auto f_tilde = propagate<double>(at, genuine.start_values, genuine.start_slopes,
                                         genuine.t_start, genuine.t_end);
  const auto b = rescale(at, lambda);
  const auto g = f_tilde.scaled_coordinates(lambda);

  Mat<double> bmat(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) bmat(i, j) = b(i, j);
  PolyhedralCone<double> cone;
  cone.ambient = m;
  const Mat<double> froot = spectral_sqrt(bmat);
  for (int i = 0; i < m; ++i) {
    Vec<double> nu(m);
    for (int r = 0; r < m; ++r) nu[r] = froot(r, i);
    cone.normals.push_back(nu);
  }
  cone.gram = bmat;

  const auto lifted = lift_from_gram(cone, g);
  const auto replay = simulate_cone(cone, lifted.x0, lifted.v0, 64, lifted.t0);
  REQUIRE((long long)replay.events.size() >= 12);
  for (int k = 0; k < 12; ++k) CHECK(replay.events[k].wall == lifted.events[k].wall);
}

TEST_CASE("high-dimensional ball example", "[cone]") {
  const auto ex = ndim_ball_example<double>(4, 0.05);
  CHECK(ex.config.dim == 3);
  CHECK(ex.config.count == 4);
  CHECK(ex.config.certified_contacts == std::vector<IndexPair>{{1, 4}, {2, 4}, {3, 4}});
  for (int i = 1; i <= 3; ++i) {
    CHECK(std::abs(std::sqrt(ex.config.pair_distance_sq(i, 4)) - 1.0) <= 1e-12);
    for (int j = i + 1; j <= 3; ++j) CHECK(ex.config.pair_distance_sq(i, j) > 1.0);
  }
  const auto cone = tangent_cone(ex.config);
  const auto traj = simulate_cone(cone, ex.x0, ex.v0, 32, 0.0);
  CHECK((long long)traj.events.size() >= 7);
}

TEST_CASE("ball example approaches the orthonormal frame", "[cone]") {
  const auto ex = ndim_ball_example<double>(5, 1e-3);
  const auto cone = tangent_cone(ex.config);
  for (int i = 0; i < cone.faces(); ++i)
    for (int j = i + 1; j < cone.faces(); ++j) CHECK(std::abs(cone.gram(i, j)) < std::sin(1e-3));
}
