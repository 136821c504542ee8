#include <catch2/catch_amalgamated.hpp>

#include "hardball/atraj.hpp"
#include "test_util.hpp"

using namespace hardball;

namespace {

Rational rat(long long num, long long den = 1) { return Rational(num, den); }

}  // namespace

TEST_CASE("edge set enumeration", "[atraj]") {
  CHECK(edge_set(1).pairs.empty());
  CHECK(edge_set(3).pairs == std::vector<IndexPair>{{1, 2}, {1, 3}, {2, 3}});
  CHECK(edge_set(5).pairs ==
        std::vector<IndexPair>{{1, 2}, {1, 3}, {2, 3}, {3, 4}, {3, 5}, {4, 5}});
  CHECK(edge_set(5).contains(3, 5));
  CHECK_FALSE(edge_set(5).contains(2, 4));
  CHECK_THROWS_AS(edge_set(0), PreconditionError);
}

TEST_CASE("edge matrix", "[atraj]") {
  const auto a1 = build_Am<Rational>(1);
  CHECK(a1(0, 0) == 1);

  const auto a3 = build_Am<Rational>(3);
  const std::vector<std::vector<int>> want = {{1, -1, -1}, {0, 1, -1}, {0, 0, 1}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(a3(i, j) == want[i][j]);

  // leading block of the next size
  for (int m = 1; m <= 8; ++m) {
    const auto a = build_Am<Rational>(m);
    const auto b = build_Am<Rational>(m + 1);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) CHECK(a(i, j) == b(i, j));
  }
}

TEST_CASE("one-sided perturbation of the edge matrix", "[atraj]") {
  const Vec<Rational> lambda = {rat(1), rat(1, 10)};
  const auto at = build_Atilde<Rational>(2, lambda);
  CHECK(at(0, 0) == 1);
  CHECK(at(0, 1) == -1);
  CHECK(at(1, 0) == rat(-1, 100));
  CHECK(at(1, 1) == 1);
  CHECK(max_norm_diff(at, build_Am<Rational>(2)) == rat(1, 100));

  // equal weights put -1 at the transposed edge positions as well
  const auto eq = build_Atilde<Rational>(5, Vec<Rational>(5, rat(3)));
  const auto es = edge_set(5);
  for (int i = 1; i <= 5; ++i)
    for (int j = 1; j <= 5; ++j) {
      if (i == j)
        CHECK(eq(i - 1, j - 1) == 1);
      else if (es.contains(i, j))
        CHECK(eq(i - 1, j - 1) == -1);
      else
        CHECK(eq(i - 1, j - 1) == 0);
    }
  CHECK_THROWS_AS(build_Atilde<Rational>(2, Vec<Rational>{rat(1), rat(0)}), PreconditionError);
}

TEST_CASE("rescaling", "[atraj]") {
  const auto a = build_Am<Rational>(4);
  const auto same = rescale(a, Vec<Rational>(4, rat(1)));
  CHECK(max_norm_diff(a, same) == 0);

  // perturb then rescale gives a symmetric matrix
  const Vec<Rational> lambda = {rat(1), rat(1, 10)};
  const auto b = rescale(build_Atilde<Rational>(2, lambda), lambda);
  CHECK(b(0, 1) == rat(-1, 10));
  CHECK(b(1, 0) == rat(-1, 10));
  CHECK(b(0, 0) == 1);
  CHECK(b(1, 1) == 1);

  Rng rng(99);
  Vec<Rational> lam;
  for (int i = 0; i < 6; ++i) lam.push_back(rat(1 + int(rng.next_u64() % 40), 7));
  const auto r = rescale(build_Am<Rational>(6), lam);
  for (int i = 0; i < 6; ++i) CHECK(r(i, i) == 1);
}

TEST_CASE("collision count closed form", "[atraj]") {
  CHECK(collision_count_formula(2) == 3);
  CHECK(collision_count_formula(3) == 7);
  CHECK(collision_count_formula(4) == 12);
  CHECK(collision_count_formula(5) == 22);
  CHECK(collision_count_formula(6) == 33);
  CHECK(collision_count_formula(8) == 78);
  CHECK_THROWS_AS(collision_count_formula(1), PreconditionError);
  for (int m = 2; m <= 20; ++m) {
    const int k = (m + 1) / 2;
    CHECK(collision_count_formula(m) >= (1LL << k));
  }
}

TEST_CASE("inductive root schedules", "[atraj]") {
  const auto r3 = build_inductive(3);
  REQUIRE(r3.schedule.progressions.size() == 3);
  const auto& t1 = r3.schedule.progressions[0];
  const auto& t2 = r3.schedule.progressions[1];
  const auto& t3 = r3.schedule.progressions[2];
  CHECK((t1.first == 0 && t1.len == 1));
  CHECK((t2.first == rat(-1, 2) && t2.diff == 1 && t2.len == 2));
  CHECK((t3.first == rat(-3, 4) && t3.diff == rat(1, 2) && t3.len == 4));

  const auto r4 = build_inductive(4);
  const auto& t4 = r4.schedule.progressions[3];
  CHECK((t4.first == rat(-1) && t4.diff == rat(1, 2) && t4.len == 5));
  // simultaneous roots pair only coordinates with vanishing couplings
  const auto rep4 = validate<Rational>(r4.trajectory, build_Am<Rational>(4),
                                       TrajectoryKind::generalized, 0);
  REQUIRE(rep4.pass);
  for (const auto& info : rep4.event_info) {
    if (info.time == rat(-1, 2) || info.time == rat(1, 2))
      CHECK(info.vanished == std::vector<int>{1, 3});  // coordinates 2 and 4
    else if (info.time == rat(0))
      CHECK(info.vanished == std::vector<int>{0, 3});  // coordinates 1 and 4
    else
      CHECK(info.vanished.size() == 1);
  }

  const auto r5 = build_inductive(5);
  const auto& t5 = r5.schedule.progressions[4];
  CHECK((t5.first == rat(-9, 8) && t5.diff == rat(1, 4) && t5.len == 10));
  CHECK(r5.schedule.total() == 22);
}

TEST_CASE("schedule lengths and interleaving", "[atraj]") {
  const auto built = build_inductive(12);
  for (int i = 1; i <= 12; ++i) {
    const auto& p = built.schedule.progressions[i - 1];
    if (i % 2 == 0) {
      const int k = i / 2;
      CHECK(p.len == (1LL << k) + (1LL << (k - 1)) - 1);
    } else if (i > 1) {
      const int k = (i - 1) / 2;
      CHECK(p.len == (1LL << (k + 1)) + (1LL << k) - 2);
    }
  }
  // every even progression strictly interleaves its odd predecessor
  for (int k = 1; 2 * k <= 12; ++k) {
    const auto& odd = built.schedule.progressions[2 * k - 2];
    const auto& even = built.schedule.progressions[2 * k - 1];
    REQUIRE(even.len == odd.len + 1);
    for (long long s = 0; s < odd.len; ++s) {
      CHECK(even.element(s) < odd.element(s));
      CHECK(odd.element(s) < even.element(s + 1));
    }
  }
}

TEST_CASE("inductive construction validates exactly", "[atraj]") {
  for (int m = 1; m <= 12; ++m) {
    const auto built = build_inductive(m);
    const auto rep =
        validate<Rational>(built.trajectory, build_Am<Rational>(m), TrajectoryKind::generalized, 0);
    INFO("m = " << m << ": " << rep.message);
    CHECK(rep.pass);
    CHECK(rep.collisions == built.schedule.total());
    // slopes stay in {-1, +1}
    for (const auto& e : built.trajectory.events)
      for (const auto& s : e.post_slopes) CHECK((s == 1 || s == -1));
    // per-coordinate root counts match the schedule
    for (int i = 0; i < m; ++i)
      CHECK(rep.roots_per_coordinate[i] == built.schedule.progressions[i].len);
  }
}

TEST_CASE("validation accepts the single zigzag and rejects tampering", "[atraj]") {
  const auto built = build_inductive(1);
  const auto a = build_Am<Rational>(1);
  auto rep = validate<Rational>(built.trajectory, a, TrajectoryKind::genuine, 0);
  CHECK(rep.pass);
  CHECK(rep.collisions == 1);

  auto tampered = built.trajectory.cast<double>();
  tampered.events[0].post_slopes[0] += 1e-3;
  const auto bad = validate<double>(tampered, a.cast<double>(), TrajectoryKind::genuine);
  CHECK_FALSE(bad.pass);
  CHECK_FALSE(bad.structural_failure);
  CHECK(bad.message.find("event 0") != std::string::npos);
}

TEST_CASE("structural corruption is reported apart from rule violations", "[atraj]") {
  auto f = build_inductive(3).trajectory;
  std::swap(f.events[0].time, f.events[1].time);  // unsorted
  const auto rep = validate<Rational>(f, build_Am<Rational>(3), TrajectoryKind::generalized, 0);
  CHECK_FALSE(rep.pass);
  CHECK(rep.structural_failure);
}

TEST_CASE("generalized mode rejects coupled simultaneous roots", "[atraj]") {
  // two coordinates hitting zero together with a nonzero coupling
  PLTrajectory<Rational> f;
  f.t_start = rat(-2);
  f.t_end = rat(2);
  f.start_values = {rat(2), rat(2)};
  f.start_slopes = {rat(-1), rat(-1)};
  f.events.push_back({rat(0), {rat(1), rat(1)}});
  const auto rep = validate<Rational>(f, build_Am<Rational>(2), TrajectoryKind::generalized, 0);
  CHECK_FALSE(rep.pass);
  CHECK_FALSE(rep.structural_failure);
}

TEST_CASE("propagation reproduces the construction event for event", "[atraj]") {
  for (int m = 1; m <= 9; ++m) {
    const auto built = build_inductive(m);
    const auto& f = built.trajectory;
    const auto g =
        propagate<Rational>(build_Am<Rational>(m), f.start_values, f.start_slopes, f.t_start, f.t_end);
    REQUIRE(g.events.size() == f.events.size());
    for (std::size_t k = 0; k < g.events.size(); ++k) {
      CHECK(g.events[k].time == f.events[k].time);
      CHECK(g.events[k].post_slopes == f.events[k].post_slopes);
    }
  }
}

TEST_CASE("propagation basics", "[atraj]") {
  const auto a = build_Am<Rational>(1);
  const auto f = propagate<Rational>(a, {rat(1)}, {rat(-1)}, rat(0), rat(3));
  REQUIRE(f.events.size() == 1);
  CHECK(f.events[0].time == 1);
  CHECK(f.events[0].post_slopes[0] == 1);

  // root of a straight descent: value 1, slope -2
  const auto g = propagate<Rational>(a, {rat(1)}, {rat(-2)}, rat(0), rat(2));
  REQUIRE(g.events.size() == 1);
  CHECK(g.events[0].time == rat(1, 2));
}

TEST_CASE("propagation keeps the domain end collision free", "[atraj]") {
  const auto a = build_Am<Rational>(1);
  // root exactly at the requested end: the domain is trimmed back
  const auto f = propagate<Rational>(a, {rat(1)}, {rat(-1)}, rat(0), rat(1));
  CHECK(f.events.empty());
  CHECK(f.t_end == rat(1, 2));
  const auto rep = validate<Rational>(f, a, TrajectoryKind::genuine, 0);
  CHECK(rep.pass);
}

TEST_CASE("propagation refuses coupled simultaneous events", "[atraj]") {
  AdmissibleMatrix<Rational> a(2);
  a(0, 1) = rat(-1);
  a(1, 0) = rat(-1);
  CHECK_THROWS_AS(
      propagate<Rational>(a, {rat(1), rat(1)}, {rat(-1), rat(-1)}, rat(0), rat(3)),
      SingularEventError);
}

TEST_CASE("de-generalization keeps counts and separates roots", "[atraj]") {
  const auto built = build_inductive(4);
  const auto a = build_Am<Rational>(4);
  const double jitter = default_jitter<double>(scalar_cast<double>(built.trajectory.min_event_gap()));
  const auto g = perturb_to_genuine<double, Rational>(built.trajectory, a, jitter, 7);
  const auto rep = validate<double>(g, a.cast<double>(), TrajectoryKind::genuine);
  INFO(rep.message);
  CHECK(rep.pass);
  CHECK(rep.collisions == 12);
  CHECK(g.events.size() == 12);
  CHECK(scalar_cast<double>(g.min_event_gap()) > Tol<double>::event_gap());
}

TEST_CASE("genuine input passes through unchanged at zero jitter", "[atraj]") {
  const auto built = build_inductive(3);  // all roots already distinct
  const auto a = build_Am<Rational>(3);
  const auto g = perturb_to_genuine<double, Rational>(built.trajectory, a, 0.0, 5);
  REQUIRE(g.events.size() == built.trajectory.events.size());
  for (std::size_t k = 0; k < g.events.size(); ++k)
    CHECK(g.events[k].time == scalar_cast<double>(built.trajectory.events[k].time));
}

TEST_CASE("zero jitter cannot split simultaneous roots", "[atraj]") {
  const auto built = build_inductive(4);  // has simultaneous roots
  const auto a = build_Am<Rational>(4);
  CHECK_THROWS_AS((perturb_to_genuine<double, Rational>(built.trajectory, a, 0.0, 5, 4)), NumericError);
}

TEST_CASE("propagation round-trips genuine float trajectories", "[atraj]") {
  const auto built = build_inductive(6);
  const auto a = build_Am<Rational>(6);
  const auto g = perturb_to_genuine<double, Rational>(built.trajectory, a, 1e-8, 21);
  const auto h = propagate<double>(a.cast<double>(), g.start_values, g.start_slopes, g.t_start, g.t_end);
  REQUIRE(h.events.size() == g.events.size());
  for (std::size_t k = 0; k < h.events.size(); ++k) {
    CHECK(std::abs(h.events[k].time - g.events[k].time) <= 1e-12);
    CHECK(h.events[k].post_slopes == g.events[k].post_slopes);
  }
}

TEST_CASE("de-generalization is deterministic in the seed", "[atraj]") {
  const auto built = build_inductive(5);
  const auto a = build_Am<Rational>(5);
  const auto g1 = perturb_to_genuine<double, Rational>(built.trajectory, a, 1e-9, 123);
  const auto g2 = perturb_to_genuine<double, Rational>(built.trajectory, a, 1e-9, 123);
  REQUIRE(g1.events.size() == g2.events.size());
  for (std::size_t k = 0; k < g1.events.size(); ++k) CHECK(g1.events[k].time == g2.events[k].time);
}

TEST_CASE("empirical stability radius", "[atraj]") {
  for (int m = 2; m <= 6; ++m) {
    const auto built = build_inductive(m);
    const auto a = build_Am<Rational>(m);
    const long long n_total = built.schedule.total();
    const auto g = perturb_to_genuine<double, Rational>(built.trajectory, a, 1e-9, 3);
    const double delta = find_delta<double>(m, g, n_total);
    CHECK(delta > 0.0);
    // propagation at the reported radius keeps all collisions
    Vec<double> lambda(m);
    const double rho = std::sqrt(delta);
    double cur = 1.0;
    for (int i = 0; i < m; ++i, cur *= rho) lambda[i] = cur;
    const auto at = build_Atilde<double>(m, lambda);
    const auto h = propagate<double>(at, g.start_values, g.start_slopes, g.t_start, g.t_end);
    const auto rep = validate<double>(h, at, TrajectoryKind::generalized);
    CHECK(rep.pass);
    CHECK(rep.collisions == n_total);
  }
}

TEST_CASE("coordinate scaling is the rescaled dynamics", "[atraj]") {
  // g_i = lambda_i f_i solves the rescaled rule exactly
  const auto built = build_inductive(5);
  const Vec<Rational> lambda = {rat(1), rat(1, 2), rat(1, 4), rat(1, 8), rat(1, 16)};
  const auto b = rescale(build_Am<Rational>(5), lambda);
  const auto g = built.trajectory.scaled_coordinates(lambda);
  const auto rep = validate<Rational>(g, b, TrajectoryKind::generalized, 0);
  INFO(rep.message);
  CHECK(rep.pass);
  CHECK(rep.collisions == 22);
}
