#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "atraj.hpp"
#include "ball_config.hpp"
#include "cone_billiard.hpp"
#include "geometry.hpp"
#include "numeric.hpp"

namespace hardball {

template <class S>
struct BallSystemState {
  BallConfiguration<S> config;
  Vec<S> velocities;  // same block layout as the centers
  S time{};

  S& vel(int ball, int axis) { return velocities[std::size_t(ball - 1) * config.dim + axis]; }
  const S& vel(int ball, int axis) const { return velocities[std::size_t(ball - 1) * config.dim + axis]; }
};

template <class S>
struct BallEventLog {
  enum class End { free_flight, horizon, max_events };

  struct Event {
    S time;
    IndexPair pair;
    Vec<S> positions;
    Vec<S> v_pre;
    Vec<S> v_post;
  };

  std::vector<Event> events;
  End end = End::free_flight;

  std::vector<IndexPair> pair_sequence() const {
    std::vector<IndexPair> seq;
    seq.reserve(events.size());
    for (const auto& e : events) seq.push_back(e.pair);
    return seq;
  }
};

/// Earliest future contact over all pairs, or nothing if the system flies
/// apart. Solves |dq + t dv| = 1 with the subtraction-free quadratic root.
/// Two candidate times within the event-gap tolerance raise
/// SingularEventError.
template <class S>
std::optional<std::pair<S, IndexPair>> next_collision(const BallSystemState<S>& state) {
  static_assert(!is_exact_v<S>, "next_collision runs in float mode");
  using std::sqrt;
  const int n = state.config.count;
  const int d = state.config.dim;
  const S gap = Tol<S>::event_gap();

  std::optional<S> best;
  IndexPair best_pair{0, 0};
  std::optional<S> second;
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      S a(0), b(0), c(0);
      for (int ax = 0; ax < d; ++ax) {
        const S dq = state.config.coord(i, ax) - state.config.coord(j, ax);
        const S dv = state.vel(i, ax) - state.vel(j, ax);
        a += dv * dv;
        b += S(2) * dq * dv;
        c += dq * dq;
      }
      c -= S(1);
      if (c < -Tol<S>::contact())
        throw OverlapError("next_collision: balls " + std::to_string(i) + "," + std::to_string(j) +
                           " overlap");
      if (c < S(0)) c = S(0);
      if (!(b < S(0)) || a == S(0)) continue;  // not approaching
      const S disc = b * b - S(4) * a * c;
      if (!(disc > S(0))) continue;  // grazing or missing
      const S dt = S(2) * c / (-b + sqrt(disc));
      if (!best || dt < *best) {
        if (best) second = *best;
        best = dt;
        best_pair = IndexPair(i, j);
      } else if (!second || dt < *second) {
        second = dt;
      }
    }
  }
  if (!best) return std::nullopt;
  if (second && *second - *best < gap)
    throw SingularEventError("next_collision: two pair events within resolution at t = " +
                             std::to_string(scalar_cast<double>(state.time + *best)));
  return std::make_pair(state.time + *best, best_pair);
}

/// Equal-mass elastic exchange: swap the normal velocity components along
/// the contact direction, tangential parts untouched. Exact for exact
/// scalars (the contact normal already has unit length).
template <class S>
BallSystemState<S> apply_elastic(BallSystemState<S> state, IndexPair pair) {
  using std::abs;
  const int d = state.config.dim;
  const int i = pair.first, j = pair.second;
  Vec<S> nrm(d);
  if constexpr (is_exact_v<S>) {
    if (state.config.pair_distance_sq(i, j) != S(1))
      throw PreconditionError("apply_elastic: pair not in contact");
    for (int ax = 0; ax < d; ++ax) nrm[ax] = state.config.coord(i, ax) - state.config.coord(j, ax);
  } else {
    using std::sqrt;
    const S dist = sqrt(state.config.pair_distance_sq(i, j));
    if (abs(dist - S(1)) > Tol<S>::contact())
      throw PreconditionError("apply_elastic: pair not in contact");
    for (int ax = 0; ax < d; ++ax)
      nrm[ax] = (state.config.coord(i, ax) - state.config.coord(j, ax)) / dist;
  }
  S rel(0);
  for (int ax = 0; ax < d; ++ax) rel += (state.vel(i, ax) - state.vel(j, ax)) * nrm[ax];
  for (int ax = 0; ax < d; ++ax) {
    state.vel(i, ax) -= rel * nrm[ax];
    state.vel(j, ax) += rel * nrm[ax];
  }
  return state;
}

template <class S>
struct SimulationResult {
  BallEventLog<S> log;
  BallSystemState<S> final_state;
};

/// Event loop: predict, advance, exchange, record. Deterministic; aborts
/// with SingularEventError on unresolved simultaneous events (the caller may
/// jitter and restart).
template <class S>
SimulationResult<S> simulate(BallSystemState<S> state, const S& horizon, long long max_events) {
  BallEventLog<S> log;
  const S gap = Tol<S>::event_gap();
  while ((long long)log.events.size() < max_events) {
    std::optional<std::pair<S, IndexPair>> nc;
    nc = next_collision(state);
    if (!nc) {
      log.end = BallEventLog<S>::End::free_flight;
      return {std::move(log), std::move(state)};
    }
    const S t_event = nc->first;
    if (t_event > horizon) {
      const S dt = horizon - state.time;
      for (std::size_t k = 0; k < state.config.centers.size(); ++k)
        state.config.centers[k] += dt * state.velocities[k];
      state.time = horizon;
      log.end = BallEventLog<S>::End::horizon;
      return {std::move(log), std::move(state)};
    }
    if (!log.events.empty() && t_event - log.events.back().time < gap)
      throw SingularEventError("simulate: events closer than resolution at t = " +
                               std::to_string(scalar_cast<double>(t_event)));
    const S dt = t_event - state.time;
    for (std::size_t k = 0; k < state.config.centers.size(); ++k)
      state.config.centers[k] += dt * state.velocities[k];
    state.time = t_event;

    typename BallEventLog<S>::Event e;
    e.time = t_event;
    e.pair = nc->second;
    e.positions = state.config.centers;
    e.v_pre = state.velocities;
    state = apply_elastic(std::move(state), nc->second);
    e.v_post = state.velocities;
    log.events.push_back(std::move(e));
  }
  log.end = BallEventLog<S>::End::max_events;
  return {std::move(log), std::move(state)};
}

/// Place the ball system on a cone trajectory: centers at q plus the scaled
/// cone position, velocities along the cone velocity normalized to unit
/// speed. The homothety pushes the start as close to the contact
/// configuration as requested; the start must be strictly collision free.
template <class S>
BallSystemState<S> realize_from_cone(const BallConfiguration<S>& q, const ConeTrajectory<S>& cone_traj,
                                     const S& lambda_scale) {
  static_assert(!is_exact_v<S>, "realize_from_cone runs in float mode");
  if (!(lambda_scale > S(0))) throw PreconditionError("realize_from_cone: lambda_scale must be positive");
  const int dn = q.dim * q.count;
  if (int(cone_traj.x0.size()) != dn)
    throw PreconditionError("realize_from_cone: cone trajectory does not live in R^{dn}");

  BallSystemState<S> state;
  state.config = q;
  state.config.certified_contacts.clear();  // the realized start touches nothing
  const S inv = S(1) / lambda_scale;
  for (int k = 0; k < dn; ++k) state.config.centers[k] += inv * cone_traj.x0[k];
  const S speed = norm(cone_traj.v0);
  if (!(speed > S(0))) throw PreconditionError("realize_from_cone: zero initial velocity");
  state.velocities.resize(dn);
  for (int k = 0; k < dn; ++k) state.velocities[k] = cone_traj.v0[k] / speed;
  state.time = S(0);

  for (int i = 1; i <= q.count; ++i)
    for (int j = i + 1; j <= q.count; ++j)
      if (!(state.config.pair_distance_sq(i, j) > S(1)))
        throw OverlapError("realize_from_cone: start not strictly collision free at pair (" +
                           std::to_string(i) + "," + std::to_string(j) + ")");
  return state;
}

// ---------------------------------------------------------------------------
// End-to-end verification
// ---------------------------------------------------------------------------

struct VerifyParams {
  double lambda_ratio = 0.125;      // geometric decay of the weight vector
  double theta = 0;                 // 0: use pi/8
  double jitter = 0;                // 0: derived from the trajectory
  std::uint64_t seed = 20240901;
  double lambda_scale_start = 1024; // 2^10
  double lambda_scale_cap = 1.15292150460684698e18;  // 2^60
  int max_events_slack = 8;
  long long max_events = 1 << 20;   // hard cap on simulated events
  int max_jitter_retries = 8;
  int max_ratio_shrinks = 5;
};

struct VerifyReport {
  int n = 0;
  int m = 0;
  long long n_predicted = 0;
  long long observed = 0;       // matched-window collision count
  long long bound = 0;          // 2^{floor(n/2)}
  bool match = false;
  int precision_bits = 0;
  double lambda_scale = 0;
  double lambda_ratio = 0;
  double theta = 0;
  double atilde_norm = 0;       // entrywise distance of the perturbed matrix
  double jitter = 0;
  std::uint64_t seed = 0;
  int attempts = 0;
  long long matched_prefix = 0;
  double wall_seconds = 0;
  std::string failure;          // empty on success
  std::vector<int> wall_sequence;
  std::vector<IndexPair> observed_pairs;
};

/// Successful-run data for callers that archive their runs.
template <class S>
struct VerifyArtifacts {
  BallConfiguration<S> config;
  ConeTrajectory<S> cone_trajectory;
  BallSystemState<S> initial_state;
  BallEventLog<S> log;
};

/// Full pipeline for one n: inductive construction, de-generalization,
/// matrix perturbation and rescale, angle realization, tangent-cone lift,
/// homothety into the ball system, and event matching against the predicted
/// wall sequence. The homothety scale doubles until the simulated pair
/// sequence matches; the weight decay shrinks if the perturbed dynamics
/// loses collisions.
template <class S>
VerifyReport verify_exponential(int n, const VerifyParams& params = VerifyParams(),
                                VerifyArtifacts<S>* artifacts = nullptr) {
  static_assert(!is_exact_v<S>, "verify_exponential runs in float mode");
  const auto clock_start = std::chrono::steady_clock::now();
  if (n < 3) throw PreconditionError("verify_exponential: n >= 3 required");
  const int m = n - 1;

  VerifyReport rep;
  rep.n = n;
  rep.m = m;
  rep.n_predicted = collision_count_formula(m);
  rep.bound = 1LL << (n / 2);
  rep.precision_bits = precision_bits<S>();
  rep.seed = params.seed;

  const InductiveResult built = build_inductive(m);
  const AdmissibleMatrix<Rational> a_exact = build_Am<Rational>(m);
  const long long n_total = built.schedule.total();
  if (n_total != rep.n_predicted) throw NumericError("verify_exponential: construction count mismatch");
  if (rep.n_predicted < rep.bound) throw NumericError("verify_exponential: count below bound");

  const S theta = params.theta > 0 ? S(params.theta) : pi_value<S>() / S(8);
  rep.theta = scalar_cast<double>(theta);
  const ContactChain chain = chain_segments(n);

  auto finish = [&](std::string why) {
    rep.failure = std::move(why);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    return rep;
  };

  S ratio = S(params.lambda_ratio);
  for (int shrink = 0; shrink <= params.max_ratio_shrinks; ++shrink, ratio /= S(2)) {
    rep.lambda_ratio = scalar_cast<double>(ratio);
    Vec<S> lambda(m);
    {
      S cur(1);
      for (int i = 0; i < m; ++i) {
        lambda[i] = cur;
        cur *= ratio;
      }
    }
    const AdmissibleMatrix<S> a_tilde = build_Atilde<S>(m, lambda);
    rep.atilde_norm = scalar_cast<double>(max_norm_diff(a_tilde, build_Am<S>(m)));

    // Angles and configuration do not depend on the jitter draw.
    AngleAssignment<S> angles;
    BallConfiguration<S> q;
    PolyhedralCone<S> cone;
    try {
      angles = angles_from_lambda<S>(lambda, theta);
      q = perturbed_configuration<S>(n, angles, theta);
      cone = tangent_cone(q);
    } catch (const Error& e) {
      rep.failure = e.what();
      continue;  // smaller ratio loosens the angle precondition
    }

    // Tangent-cone Gram must reproduce the rescaled matrix.
    const AdmissibleMatrix<S> b = rescale(a_tilde, lambda);
    {
      S worst(0);
      using std::abs;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          const S d = abs(cone.gram(i, j) - b(i, j));
          if (d > worst) worst = d;
        }
      if (worst > S(1e4) * Tol<S>::residual()) {
        rep.failure = "tangent cone Gram does not reproduce the rescaled matrix";
        continue;
      }
    }

    for (int attempt = 0; attempt < params.max_jitter_retries; ++attempt) {
      ++rep.attempts;
      try {
        // Genuine trajectory for the exact matrix.
        const S jitter = params.jitter > 0
                             ? S(params.jitter)
                             : default_jitter<S>(scalar_cast<S>(built.trajectory.min_event_gap()));
        rep.jitter = scalar_cast<double>(jitter);
        const PLTrajectory<S> genuine = perturb_to_genuine<S, Rational>(
            built.trajectory, a_exact, jitter, mix_seed(params.seed, std::uint64_t(attempt)));

        // Same initial data under the perturbed matrix.
        PLTrajectory<S> f_tilde =
            propagate<S>(a_tilde, genuine.start_values, genuine.start_slopes, genuine.t_start, genuine.t_end);
        const auto rep_tilde = validate<S>(f_tilde, a_tilde, TrajectoryKind::genuine, Tol<S>::residual());
        if (!rep_tilde.pass || rep_tilde.collisions != n_total) {
          rep.failure = "perturbed matrix lost the collision pattern: " +
                        (rep_tilde.pass ? std::to_string(rep_tilde.collisions) + " collisions"
                                        : rep_tilde.message);
          break;  // deterministic in the ratio; shrink it
        }

        // Rescale into the symmetric matrix and lift into the tangent cone.
        const PLTrajectory<S> g = f_tilde.scaled_coordinates(lambda);
        const auto rep_b = validate<S>(g, b, TrajectoryKind::genuine, S(1e3) * Tol<S>::residual());
        if (!rep_b.pass) {
          rep.failure = "rescaled trajectory failed validation: " + rep_b.message;
          break;
        }
        const ConeTrajectory<S> cone_traj = lift_from_gram(cone, g);
        rep.wall_sequence = cone_traj.wall_sequence();

        // Homothety search: double until the ball system reproduces the
        // full wall sequence.
        S scale = S(params.lambda_scale_start);
        while (scalar_cast<double>(scale) <= params.lambda_scale_cap) {
          rep.lambda_scale = scalar_cast<double>(scale);
          BallSystemState<S> state = realize_from_cone(q, cone_traj, scale);
          SimulationResult<S> sim;
          try {
            const S horizon = std::numeric_limits<S>::has_infinity ? std::numeric_limits<S>::infinity()
                                                                   : S(1e30);
            sim = simulate(std::move(state), horizon,
                           std::min<long long>(n_total + params.max_events_slack, params.max_events));
          } catch (const SingularEventError&) {
            scale *= S(2);
            continue;
          }
          long long matched = 0;
          for (std::size_t k = 0; k < sim.log.events.size() && k < rep.wall_sequence.size(); ++k) {
            const int seg = chain.segment_of(sim.log.events[k].pair);
            if (seg != rep.wall_sequence[k]) break;
            ++matched;
          }
          rep.matched_prefix = std::max(rep.matched_prefix, matched);
          if (matched == n_total) {
            rep.observed = matched;
            rep.observed_pairs = sim.log.pair_sequence();
            rep.match = true;
            if (artifacts) {
              artifacts->config = q;
              artifacts->cone_trajectory = cone_traj;
              artifacts->initial_state = realize_from_cone(q, cone_traj, scale);
              artifacts->log = sim.log;
            }
            return finish("");
          }
          scale *= S(2);
        }
        rep.failure = "no homothety scale matched the full sequence (best prefix " +
                      std::to_string(rep.matched_prefix) + " of " + std::to_string(n_total) + ")";
      } catch (const SingularEventError& e) {
        rep.failure = e.what();
        continue;  // fresh jitter
      } catch (const NumericError& e) {
        rep.failure = e.what();
        continue;
      }
      break;  // deterministic failure for this ratio
    }
  }
  return finish(rep.failure.empty() ? "verification failed" : rep.failure);
}

}  // namespace hardball
