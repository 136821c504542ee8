#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "atraj.hpp"
#include "geometry.hpp"
#include "numeric.hpp"

namespace hardball {

/// Segments between touching balls of the chain configuration, in the
/// canonical enumeration: u_1 = (1,2), u_{2k} = (2k, 2k+1),
/// u_{2k+1} = (2k, 2k+2).
struct ContactChain {
  int n = 0;
  std::vector<IndexPair> segments;  // 1-based ball indices

  /// Wall/segment index (1-based) of a ball pair, 0 if absent.
  int segment_of(IndexPair p) const {
    if (p.first > p.second) std::swap(p.first, p.second);
    for (std::size_t k = 0; k < segments.size(); ++k)
      if (segments[k] == p) return int(k) + 1;
    return 0;
  }
};

inline ContactChain chain_segments(int n) {
  if (n < 2) throw PreconditionError("chain_segments: n >= 2 required");
  ContactChain chain;
  chain.n = n;
  for (int s = 1; s <= n - 1; ++s) {
    if (s == 1)
      chain.segments.emplace_back(1, 2);
    else if (s % 2 == 0)
      chain.segments.emplace_back(s, s + 1);
    else
      chain.segments.emplace_back(s - 1, s + 1);
  }
  return chain;
}

/// Map from edge-set pairs to segment angles, radians.
template <class S>
struct AngleAssignment {
  int m = 0;
  std::map<IndexPair, S> alpha;

  const S& at(int i, int j) const {
    const auto it = alpha.find(IndexPair(i, j));
    if (it == alpha.end())
      throw PreconditionError("AngleAssignment: missing angle (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
    return it->second;
  }

  /// Every edge pair set to pi/2.
  static AngleAssignment right_angles(int m) {
    AngleAssignment a;
    a.m = m;
    for (const auto& p : edge_set(m).pairs) a.alpha[p] = pi_value<S>() / S(2);
    return a;
  }
};

/// The reference chain configuration in R^3, integer coordinates. Chain
/// pairs are at distance exactly 1, everything else at squared distance >= 2.
template <class S>
BallConfiguration<S> hat_configuration(int n) {
  if (n < 2) throw PreconditionError("hat_configuration: n >= 2 required");
  BallConfiguration<S> q(3, n);
  for (int i = 2; i <= n; ++i) {
    int k = 0, x = 0, y = 0, z = 0;
    switch (i % 4) {
      case 2: k = (i + 2) / 4; x = k; y = k - 1; z = 0; break;
      case 3: k = (i + 1) / 4; x = k; y = k - 1; z = -1; break;
      case 0: k = i / 4; x = k; y = k; z = 0; break;
      case 1: k = (i - 1) / 4; x = k; y = k; z = 1; break;
    }
    q.coord(i, 0) = S(x);
    q.coord(i, 1) = S(y);
    q.coord(i, 2) = S(z);
  }
  q.certified_contacts = chain_segments(n).segments;
  return q;
}

namespace detail {

template <class S>
S cross_z(const Vec<S>& a, const Vec<S>& b) {
  return a[0] * b[1] - a[1] * b[0];
}

// Other endpoint of segment u_s relative to its shared ball.
inline int other_end(IndexPair seg, int shared) {
  return seg.first == shared ? seg.second : seg.first;
}

}  // namespace detail

/// Angle between two chain segments sharing a ball, measured between the
/// unit arms leaving the shared ball.
template <class S>
S segment_angle(const BallConfiguration<S>& q, IndexPair u, IndexPair v) {
  using std::acos;
  int shared = 0;
  if (u.first == v.first || u.first == v.second) shared = u.first;
  else if (u.second == v.first || u.second == v.second) shared = u.second;
  else throw PreconditionError("segment_angle: segments do not meet");
  const int a = detail::other_end(u, shared);
  const int b = detail::other_end(v, shared);
  S c(0);
  for (int ax = 0; ax < q.dim; ++ax)
    c += (q.coord(a, ax) - q.coord(shared, ax)) * (q.coord(b, ax) - q.coord(shared, ax));
  if (c > S(1)) c = S(1);
  if (c < S(-1)) c = S(-1);
  return acos(c);
}

namespace detail {

// Core of the perturbed construction for odd m: planar backbone first, then
// the out-of-plane balls. Returns m+1 ball centers in R^3.
template <class S>
BallConfiguration<S> perturbed_odd(int m, const AngleAssignment<S>& angles) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const int n = m + 1;
  const BallConfiguration<S> hat = hat_configuration<S>(n);
  const ContactChain chain = chain_segments(n);
  BallConfiguration<S> q(3, n);
  // q_1 and q_2 as in the reference configuration.
  for (int a = 0; a < 3; ++a) {
    q.coord(1, a) = hat.coord(1, a);
    q.coord(2, a) = hat.coord(2, a);
  }

  // Planar backbone: for odd i >= 3 place ball i+1 in the xy-plane so that
  // segments u_{i-2} and u_i meet at the prescribed angle with the reference
  // orientation.
  for (int i = 3; i <= m; i += 2) {
    const int ball_c = i - 1;             // shared ball of u_{i-2} and u_i
    const int ball_prev = (i == 3) ? 1 : i - 3;  // far end of u_{i-2}
    const int ball_new = i + 1;           // far end of u_i
    const S alpha = angles.at(i - 2, i);

    Vec<S> d_prev = {q.coord(ball_prev, 0) - q.coord(ball_c, 0),
                     q.coord(ball_prev, 1) - q.coord(ball_c, 1)};
    // reference orientation sign of the triangle (prev, c, new)
    Vec<S> h_cp = {hat.coord(ball_c, 0) - hat.coord(ball_prev, 0),
                   hat.coord(ball_c, 1) - hat.coord(ball_prev, 1)};
    Vec<S> h_nc = {hat.coord(ball_new, 0) - hat.coord(ball_c, 0),
                   hat.coord(ball_new, 1) - hat.coord(ball_c, 1)};
    const S sigma = cross_z(h_cp, h_nc) >= S(0) ? S(1) : S(-1);

    // unit normal of d_prev picked so the new triangle matches sigma
    Vec<S> perp = {-d_prev[1] * (-sigma), d_prev[0] * (-sigma)};
    Vec<S> d_new = {cos(alpha) * d_prev[0] + sin(alpha) * perp[0],
                    cos(alpha) * d_prev[1] + sin(alpha) * perp[1]};
    q.coord(ball_new, 0) = q.coord(ball_c, 0) + d_new[0];
    q.coord(ball_new, 1) = q.coord(ball_c, 1) + d_new[1];
    q.coord(ball_new, 2) = S(0);
  }

  // Out-of-plane balls: for even i place ball i+1 off the plane, matching
  // the two prescribed angles at the backbone ball i and the reference
  // half-space.
  for (int i = 2; i <= m - 1; i += 2) {
    const int ball_c = i;
    const int ball_a = (i == 2) ? 1 : i - 2;  // far end of u_{i-1}
    const int ball_b = i + 2;                 // far end of u_{i+1}
    const int ball_new = i + 1;
    const S cos_a = cos(angles.at(i - 1, i));
    const S cos_b = cos(angles.at(i, i + 1));

    Vec<S> da(3), db(3);
    for (int ax = 0; ax < 3; ++ax) {
      da[ax] = q.coord(ball_a, ax) - q.coord(ball_c, ax);
      db[ax] = q.coord(ball_b, ax) - q.coord(ball_c, ax);
    }
    const S c_ab = dot(da, db);
    const S s_ab_sq = S(1) - c_ab * c_ab;
    if (!(s_ab_sq > Tol<S>::residual()))
      throw NumericError("perturbed_configuration: backbone frame degenerate at ball " +
                         std::to_string(ball_c));
    const S s_ab = sqrt(s_ab_sq);
    // Local frame: e1 along da, e2 completing db in the plane, e3 normal.
    Vec<S> e1 = da;
    Vec<S> e2(3);
    for (int ax = 0; ax < 3; ++ax) e2[ax] = (db[ax] - c_ab * da[ax]) / s_ab;
    Vec<S> e3 = {e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2],
                 e1[0] * e2[1] - e1[1] * e2[0]};

    const S u = cos_a;
    const S w = (cos_b - c_ab * cos_a) / s_ab;
    const S h_sq = S(1) - u * u - w * w;
    if (!(h_sq > S(0)))
      throw NumericError("perturbed_configuration: angle triple infeasible at ball " +
                         std::to_string(ball_c));
    S h = sqrt(h_sq);
    // pick the half-space of the reference configuration
    const S hat_side = hat.coord(ball_new, 2);
    if ((e3[2] > S(0)) != (hat_side > S(0))) h = -h;
    for (int ax = 0; ax < 3; ++ax)
      q.coord(ball_new, ax) = q.coord(ball_c, ax) + u * e1[ax] + w * e2[ax] + h * e3[ax];
  }

  q.certified_contacts = chain.segments;
  return q;
}

}  // namespace detail

/// Chain configuration with the prescribed segment angles on the edge set.
/// Contact combinatorics match the reference chain; throws if the requested
/// angles leave some non-contact pair at distance <= 1 (theta too large for
/// this n) or if an angle is outside the theta window.
template <class S>
BallConfiguration<S> perturbed_configuration(int n, const AngleAssignment<S>& angles, const S& theta) {
  static_assert(!is_exact_v<S>, "perturbed_configuration is float-only");
  using std::abs;
  const int m = n - 1;
  if (n < 2) throw PreconditionError("perturbed_configuration: n >= 2 required");
  if (!(theta > S(0)) || !(theta < pi_value<S>() / S(6)))
    throw PreconditionError("perturbed_configuration: theta must lie in (0, pi/6)");
  const S half_pi = pi_value<S>() / S(2);
  for (const auto& p : edge_set(m).pairs)
    if (abs(angles.at(p.first, p.second) - half_pi) >= theta)
      throw PreconditionError("perturbed_configuration: angle (" + std::to_string(p.first) + "," +
                              std::to_string(p.second) + ") outside the theta window");

  BallConfiguration<S> q;
  if (m % 2 == 1) {
    q = detail::perturbed_odd(m, angles);
  } else {
    // Even m: run the odd construction one segment longer with right angles
    // on the two extra pairs, then drop the extra ball.
    AngleAssignment<S> ext = angles;
    ext.m = m + 1;
    ext.alpha[IndexPair(m, m + 1)] = half_pi;
    ext.alpha[IndexPair(m - 1, m + 1)] = half_pi;
    BallConfiguration<S> big = detail::perturbed_odd(m + 1, ext);
    q = BallConfiguration<S>(3, n);
    for (int i = 1; i <= n; ++i)
      for (int a = 0; a < 3; ++a) q.coord(i, a) = big.coord(i, a);
    q.certified_contacts = chain_segments(n).segments;
  }

  // Post checks: achieved angles, contact distances, and separation of all
  // non-contact pairs.
  const ContactChain chain = chain_segments(n);
  for (const auto& p : edge_set(m).pairs) {
    const S got = segment_angle(q, chain.segments[p.first - 1], chain.segments[p.second - 1]);
    if (abs(got - angles.at(p.first, p.second)) > Tol<S>::lift())
      throw NumericError("perturbed_configuration: achieved angle off target on (" +
                         std::to_string(p.first) + "," + std::to_string(p.second) + ")");
  }
  using std::sqrt;
  for (const auto& seg : chain.segments) {
    const S dist = sqrt(q.pair_distance_sq(seg.first, seg.second));
    if (abs(dist - S(1)) > Tol<S>::lift())
      throw NumericError("perturbed_configuration: contact pair off unit distance");
  }
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      if (chain.segment_of(IndexPair(i, j)) != 0) continue;
      if (!(q.pair_distance_sq(i, j) > S(1)))
        throw NumericError("perturbed_configuration: non-contact pair (" + std::to_string(i) + "," +
                           std::to_string(j) + ") at distance <= 1; theta too large for this n");
    }
  return q;
}

/// Angles realizing the rescaled matrix as a Gram matrix:
/// cos(alpha_ij) = -2 lambda_j / lambda_i on the edge set. Requires the
/// ratios to stay under sin(theta)/2 so the angles fall in the theta window.
template <class S>
AngleAssignment<S> angles_from_lambda(const Vec<S>& lambda, const S& theta) {
  static_assert(!is_exact_v<S>, "angles_from_lambda is float-only");
  using std::acos;
  using std::sin;
  const int m = int(lambda.size());
  if (m < 1) throw PreconditionError("angles_from_lambda: empty lambda");
  for (const S& l : lambda)
    if (!(l > S(0))) throw PreconditionError("angles_from_lambda: lambda must be strictly positive");
  AngleAssignment<S> out;
  out.m = m;
  const S bound = sin(theta) / S(2);
  for (const auto& p : edge_set(m).pairs) {
    const S ratio = lambda[p.second - 1] / lambda[p.first - 1];
    if (!(ratio < bound))
      throw PreconditionError("angles_from_lambda: ratio " + std::to_string(scalar_cast<double>(ratio)) +
                              " on (" + std::to_string(p.first) + "," + std::to_string(p.second) +
                              ") not below sin(theta)/2; lambda decays too slowly for this theta");
    out.alpha[p] = acos(S(-2) * ratio);
  }
  return out;
}

/// Decreasing search for a workable angle window: starting from pi/8, keep
/// halving until the extreme assignments within the window leave every
/// non-contact pair clear of distance 1 + 1e-6.
template <class S>
S find_theta(int n, std::uint64_t seed = 2024, int max_halvings = 20) {
  static_assert(!is_exact_v<S>, "find_theta is float-only");
  const int m = n - 1;
  const S half_pi = pi_value<S>() / S(2);
  S theta = pi_value<S>() / S(8);
  for (int step = 0; step < max_halvings; ++step, theta /= S(2)) {
    const S reach = theta * S(0.999);
    bool ok = true;
    for (int variant = 0; variant < 7 && ok; ++variant) {
      AngleAssignment<S> a;
      a.m = m;
      Rng rng(mix_seed(seed, std::uint64_t(variant)));
      int sign = 1;
      for (const auto& p : edge_set(m).pairs) {
        S off;
        switch (variant) {
          case 0: off = reach; break;
          case 1: off = -reach; break;
          case 2: off = S(sign) * reach; sign = -sign; break;
          default: off = rng.uniform_pm<S>(reach); break;
        }
        a.alpha[p] = half_pi + off;
      }
      try {
        const BallConfiguration<S> q = perturbed_configuration<S>(n, a, theta);
        const ContactChain chain = chain_segments(n);
        using std::sqrt;
        for (int i = 1; i <= n && ok; ++i)
          for (int j = i + 1; j <= n; ++j) {
            if (chain.segment_of(IndexPair(i, j)) != 0) continue;
            if (!(sqrt(q.pair_distance_sq(i, j)) > S(1) + S(1e-6))) {
              ok = false;
              break;
            }
          }
      } catch (const Error&) {
        ok = false;
      }
    }
    if (ok) return theta;
  }
  throw NumericError("find_theta: no workable theta found for n = " + std::to_string(n));
}

}  // namespace hardball
