#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "atraj.hpp"
#include "geometry.hpp"
#include "linalg.hpp"
#include "numeric.hpp"

namespace hardball {

/// Billiard trajectory in a polyhedral cone: straight flight between events,
/// one wall per event, speed constant throughout.
template <class S>
struct ConeTrajectory {
  enum class Termination { escape, max_events, constructed };

  struct Event {
    S time;
    int wall = 0;  // 1-based face index
    Vec<S> pos;
    Vec<S> v_pre;
    Vec<S> v_post;
  };

  S t0{};
  Vec<S> x0;
  Vec<S> v0;
  std::vector<Event> events;
  S t_end{};
  Termination termination = Termination::escape;

  std::vector<int> wall_sequence() const {
    std::vector<int> w;
    w.reserve(events.size());
    for (const auto& e : events) w.push_back(e.wall);
    return w;
  }

  const Vec<S>& final_velocity() const { return events.empty() ? v0 : events.back().v_post; }

  Vec<S> position_at(const S& t) const {
    Vec<S> x = x0;
    S cur = t0;
    const Vec<S>* v = &v0;
    for (const auto& e : events) {
      if (e.time >= t) break;
      axpy(e.time - cur, *v, x);
      cur = e.time;
      v = &e.v_post;
    }
    axpy(t - cur, *v, x);
    return x;
  }
};

/// Event-driven reflection in the cone. Starts strictly inside, advances to
/// the nearest approached wall, reflects with the unit normal, and stops at
/// escape (no wall ahead) or the event cap. Two walls reached within the
/// event-gap tolerance terminate the run as singular.
template <class S>
ConeTrajectory<S> simulate_cone(const PolyhedralCone<S>& cone, Vec<S> x, Vec<S> v, long long max_events,
                                const S& t0 = S(0)) {
  static_assert(!is_exact_v<S>, "simulate_cone runs in float mode");
  if (int(x.size()) != cone.ambient || int(v.size()) != cone.ambient)
    throw PreconditionError("simulate_cone: dimension mismatch");
  const int m = cone.faces();
  const S gap = Tol<S>::event_gap();
  for (int i = 0; i < m; ++i)
    if (!(dot(cone.normals[i], x) > S(0)))
      throw PreconditionError("simulate_cone: start point not strictly inside (wall " +
                              std::to_string(i + 1) + ")");

  ConeTrajectory<S> traj;
  traj.t0 = t0;
  traj.x0 = x;
  traj.v0 = v;

  S t = t0;
  while ((long long)traj.events.size() < max_events) {
    std::optional<S> best;
    int best_wall = -1;
    std::optional<S> second;
    for (int i = 0; i < m; ++i) {
      const S vn = dot(cone.normals[i], v);
      if (!(vn < S(0))) continue;
      S p = dot(cone.normals[i], x);
      if (p < S(0)) p = S(0);  // roundoff penetration
      const S dt = -p / vn;
      if (!best || dt < *best) {
        if (best) second = *best;
        best = dt;
        best_wall = i;
      } else if (!second || dt < *second) {
        second = dt;
      }
    }
    if (!best) {
      traj.termination = ConeTrajectory<S>::Termination::escape;
      traj.t_end = t + S(1);
      return traj;
    }
    if (second && *second - *best < gap)
      throw SingularEventError("simulate_cone: two walls reached within resolution at t = " +
                               std::to_string(scalar_cast<double>(t + *best)));

    typename ConeTrajectory<S>::Event e;
    e.time = t + *best;
    e.wall = best_wall + 1;
    axpy(*best, v, x);
    // project the tiny residual off the wall
    const S res = dot(cone.normals[best_wall], x);
    axpy(-res, cone.normals[best_wall], x);
    e.pos = x;
    e.v_pre = v;
    const S vn = dot(cone.normals[best_wall], v);
    axpy(S(-2) * vn, cone.normals[best_wall], v);
    e.v_post = v;
    traj.events.push_back(std::move(e));
    t = e.time;
  }
  traj.termination = ConeTrajectory<S>::Termination::max_events;
  // leave a collision-free tail before the next event
  std::optional<S> next;
  for (int i = 0; i < m; ++i) {
    const S vn = dot(cone.normals[i], v);
    if (!(vn < S(0))) continue;
    const S dt = -dot(cone.normals[i], x) / vn;
    if (!next || dt < *next) next = dt;
  }
  traj.t_end = next ? t + *next / S(2) : t + S(1);
  return traj;
}

/// Face-distance functions f_i(t) = <gamma(t), nu_i> of a cone trajectory.
/// The result obeys the reflection rule driven by the Gram matrix.
template <class S>
PLTrajectory<S> gram_coordinates(const PolyhedralCone<S>& cone, const ConeTrajectory<S>& traj) {
  const int m = cone.faces();
  if (!Cholesky<S>(cone.gram).ok)
    throw PreconditionError("gram_coordinates: normals not linearly independent");
  PLTrajectory<S> f;
  f.t_start = traj.t0;
  f.t_end = traj.t_end;
  f.start_values.resize(m);
  f.start_slopes.resize(m);
  for (int i = 0; i < m; ++i) {
    f.start_values[i] = dot(cone.normals[i], traj.x0);
    f.start_slopes[i] = dot(cone.normals[i], traj.v0);
  }
  for (const auto& e : traj.events) {
    typename PLTrajectory<S>::Event fe;
    fe.time = e.time;
    fe.post_slopes.resize(m);
    for (int i = 0; i < m; ++i) fe.post_slopes[i] = dot(cone.normals[i], e.v_post);
    f.events.push_back(std::move(fe));
  }
  return f;
}

/// The Gram matrix of a cone packaged as the matrix driving the reflection
/// rule of its face-distance functions.
template <class S>
AdmissibleMatrix<S> gram_as_matrix(const PolyhedralCone<S>& cone) {
  AdmissibleMatrix<S> a(cone.faces());
  for (int i = 0; i < cone.faces(); ++i)
    for (int j = 0; j < cone.faces(); ++j) a(i, j) = cone.gram(i, j);
  return a;
}

/// Inverse of gram_coordinates: the unique ambient trajectory in the span of
/// the normals whose face distances reproduce f. Requires a genuine
/// trajectory (one wall per event) and linearly independent normals.
template <class S>
ConeTrajectory<S> lift_from_gram(const PolyhedralCone<S>& cone, const PLTrajectory<S>& f) {
  using std::abs;
  const int m = cone.faces();
  if (f.coords() != m) throw PreconditionError("lift_from_gram: coordinate count mismatch");
  const Cholesky<S> chol(cone.gram);
  if (!chol.ok) throw PreconditionError("lift_from_gram: normals not linearly independent");

  const auto rep = validate<S>(f, gram_as_matrix(cone), TrajectoryKind::genuine, Tol<S>::lift());
  if (!rep.pass)
    throw PreconditionError("lift_from_gram: input does not validate against the Gram: " + rep.message);

  auto span_point = [&](const Vec<S>& xi) {
    const Vec<S> c = chol.solve(xi);
    Vec<S> x(cone.ambient, S(0));
    for (int i = 0; i < m; ++i) axpy(c[i], cone.normals[i], x);
    return x;
  };

  ConeTrajectory<S> traj;
  traj.t0 = f.t_start;
  traj.t_end = f.t_end;
  traj.termination = ConeTrajectory<S>::Termination::constructed;
  traj.x0 = span_point(f.start_values);
  traj.v0 = span_point(f.start_slopes);

  Vec<S> v_prev = traj.v0;
  for (std::size_t k = 0; k < f.events.size(); ++k) {
    typename ConeTrajectory<S>::Event e;
    e.time = f.events[k].time;
    e.wall = rep.event_info[k].vanished.front() + 1;
    e.pos = span_point(f.values_at(e.time));
    e.v_pre = v_prev;
    e.v_post = span_point(f.events[k].post_slopes);
    v_prev = e.v_post;

    // round-trip residual, relative to the magnitude of the face distances
    const Vec<S> vals = f.values_at(e.time);
    S scale(1);
    for (int i = 0; i < m; ++i)
      if (abs(vals[i]) > scale) scale = abs(vals[i]);
    for (int i = 0; i < m; ++i)
      if (abs(dot(cone.normals[i], e.pos) - vals[i]) > Tol<S>::lift() * scale)
        throw NumericError("lift_from_gram: residual above tolerance at event " + std::to_string(k));
    traj.events.push_back(std::move(e));
  }
  return traj;
}

/// Cone with m near-orthogonal faces plus initial data whose billiard
/// trajectory experiences 2^m - 1 collisions.
template <class S>
struct RightAngleExample {
  PolyhedralCone<S> cone;
  S t0{};
  Vec<S> x0;
  Vec<S> v0;
  std::vector<int> wall_sequence;  // predicted, length 2^m - 1
};

/// Doubling step: extend the cone by one coordinate, add a wall whose normal
/// sits within eps of the new axis, and fold the trajectory at the
/// orthogonal hit, repeating the previous history in reverse. The slope and
/// offset constants are powers of two chosen by doubling, so each level
/// stays exactly representable.
template <class S>
RightAngleExample<S> build_right_angle_example(int m, const S& eps) {
  static_assert(!is_exact_v<S>, "build_right_angle_example runs in float mode");
  using std::ceil;
  using std::log2;
  using std::sqrt;
  using std::tan;
  if (m < 1) throw PreconditionError("build_right_angle_example: m >= 1 required");
  if (!(eps > S(0)) || !(eps < pi_value<S>() / S(4)))
    throw PreconditionError("build_right_angle_example: eps must lie in (0, pi/4)");
  if (m > 40) throw PreconditionError("build_right_angle_example: m too large");

  // Level 1: the half line {x >= 0} with one bounce at the origin.
  RightAngleExample<S> ex;
  ex.cone.ambient = 1;
  ex.cone.normals = {Vec<S>{S(1)}};
  ex.cone.gram = Mat<S>::identity(1);
  ex.t0 = S(0);
  ex.x0 = {S(1)};
  ex.v0 = {S(-1)};
  ex.wall_sequence = {1};

  // Recursion state: the first and last collision of the current trajectory.
  S t_first = S(1);
  Vec<S> p_first = {S(0)};
  Vec<S> v_in_first = {S(-1)};  // velocity before the first collision
  S t_last = S(1);
  Vec<S> p_last = {S(0)};
  Vec<S> w = {S(1)};  // velocity after the last collision
  S speed_sq = S(1);

  const S cot_half = S(1) / tan(eps / S(2));
  for (int level = 2; level <= m; ++level) {
    const int dim = level;
    const S speed = sqrt(speed_sq);

    // Slope of the added coordinate: large enough that the downhill
    // direction tilts within eps/2 of the new axis.
    const int e0 = int(ceil(log2(scalar_cast<double>(speed * cot_half))));
    const S c0 = pow2<S>(std::max(e0, 0));
    // Offset: large enough that the whole history stays on the inner side
    // of the new wall until one time unit past the last collision.
    Vec<S> pw = p_last;
    axpy(S(1), w, pw);
    const S bound = dot(pw, w) / c0 + c0 * (t_last + S(1));
    S c1 = pow2<S>(std::max(bound > S(1) ? int(ceil(log2(scalar_cast<double>(bound)))) : 0, 0));
    while (!(c1 > bound)) c1 *= S(2);

    auto lifted = [&](const Vec<S>& src, const S& tail) {
      Vec<S> out = src;
      out.push_back(tail);
      return out;
    };

    const S denom = sqrt(speed_sq + c0 * c0);
    Vec<S> new_normal(dim);
    for (int i = 0; i < dim - 1; ++i) new_normal[i] = -w[i] / denom;
    new_normal[dim - 1] = c0 / denom;

    PolyhedralCone<S> cone;
    cone.ambient = dim;
    for (const auto& nu : ex.cone.normals) cone.normals.push_back(lifted(nu, S(0)));
    cone.normals.push_back(new_normal);
    cone.gram = Mat<S>(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) cone.gram(i, j) = dot(cone.normals[i], cone.normals[j]);
    ex.cone = std::move(cone);

    ex.x0 = lifted(ex.x0, c1 - c0 * ex.t0);
    ex.v0 = lifted(ex.v0, -c0);

    // Orthogonal hit of the extended final ray on the new wall.
    const S t_hit = (-dot(p_last, w) + t_last * speed_sq + c0 * c1) / (speed_sq + c0 * c0);

    std::vector<int> seq = ex.wall_sequence;
    seq.push_back(level);
    for (auto it = ex.wall_sequence.rbegin(); it != ex.wall_sequence.rend(); ++it) seq.push_back(*it);
    ex.wall_sequence = std::move(seq);

    // New first collision: the old one, lifted. New last collision: the
    // mirror image of the old first one across the fold.
    const Vec<S> p_first_lifted = lifted(p_first, c1 - c0 * t_first);
    const Vec<S> v_in_first_lifted = lifted(v_in_first, -c0);

    t_last = S(2) * t_hit - t_first;
    p_last = p_first_lifted;
    w.assign(dim, S(0));
    for (int i = 0; i < dim - 1; ++i) w[i] = -v_in_first[i];
    w[dim - 1] = c0;

    p_first = p_first_lifted;
    v_in_first = v_in_first_lifted;
    speed_sq += c0 * c0;
  }
  return ex;
}

/// Ball configuration in R^{n-1} whose tangent cone is isometric to the
/// doubling cone: unit center vectors realizing twice the cone Gram, the
/// last ball at the origin touching all the others. Returns the
/// configuration together with the initial data mapped into the tangent
/// cone, ready for simulation in R^{(n-1) n}.
template <class S>
struct NdimBallExample {
  BallConfiguration<S> config;
  Vec<S> x0;  // in R^{dn}
  Vec<S> v0;
  std::vector<int> wall_sequence;  // predicted, length 2^{n-1} - 1
};

template <class S>
NdimBallExample<S> ndim_ball_example(int n, const S& eps) {
  static_assert(!is_exact_v<S>, "ndim_ball_example runs in float mode");
  const int m = n - 1;
  if (n < 2) throw PreconditionError("ndim_ball_example: n >= 2 required");
  const RightAngleExample<S> ra = build_right_angle_example<S>(m, eps);

  // Target Gram of the center vectors: unit diagonal, twice the cone Gram
  // off the diagonal.
  Mat<S> gq(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) gq(i, j) = i == j ? S(1) : S(2) * ra.cone.gram(i, j);
  Mat<S> f;
  try {
    f = spectral_sqrt(gq);
  } catch (const NumericError&) {
    throw NumericError("ndim_ball_example: center Gram not positive definite; eps too large");
  }

  NdimBallExample<S> out;
  out.config = BallConfiguration<S>(m, n);
  for (int i = 1; i <= m; ++i)
    for (int a = 0; a < m; ++a) out.config.coord(i, a) = f(a, i - 1);
  // ball n stays at the origin
  for (int i = 1; i <= m; ++i) out.config.certified_contacts.emplace_back(i, n);
  for (int i = 1; i <= m; ++i)
    for (int j = i + 1; j <= m; ++j)
      if (!(out.config.pair_distance_sq(i, j) > S(1)))
        throw NumericError("ndim_ball_example: non-touching balls too close; eps too large");

  // Isometry between the cone frame and the tangent-cone frame: match the
  // face distances of the initial data.
  const PolyhedralCone<S> cone_ball = tangent_cone(out.config);
  const Cholesky<S> chol(cone_ball.gram);
  if (!chol.ok) throw NumericError("ndim_ball_example: tangent cone normals degenerate");
  Vec<S> xi(m), xv(m);
  for (int i = 0; i < m; ++i) {
    xi[i] = dot(ra.cone.normals[i], ra.x0);
    xv[i] = dot(ra.cone.normals[i], ra.v0);
  }
  auto span_point = [&](const Vec<S>& rhs) {
    const Vec<S> c = chol.solve(rhs);
    Vec<S> x(cone_ball.ambient, S(0));
    for (int i = 0; i < m; ++i) axpy(c[i], cone_ball.normals[i], x);
    return x;
  };
  out.x0 = span_point(xi);
  out.v0 = span_point(xv);
  out.wall_sequence = ra.wall_sequence;
  return out;
}

}  // namespace hardball
