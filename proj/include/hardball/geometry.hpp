#pragma once

#include <string>
#include <utility>
#include <vector>

#include "linalg.hpp"
#include "numeric.hpp"

namespace hardball {

/// Centers of n unit-diameter balls in R^d, stored as n blocks of length d.
/// Constructors that place balls at exact unit distance list those pairs in
/// `certified_contacts` so downstream code does not re-detect them.
template <class S>
struct BallConfiguration {
  int dim = 0;
  int count = 0;
  Vec<S> centers;  // count blocks of dim entries
  std::vector<IndexPair> certified_contacts;

  BallConfiguration() = default;
  BallConfiguration(int d, int n) : dim(d), count(n), centers(std::size_t(d) * n, S(0)) {}

  S& coord(int ball, int axis) { return centers[std::size_t(ball - 1) * dim + axis]; }
  const S& coord(int ball, int axis) const { return centers[std::size_t(ball - 1) * dim + axis]; }

  Vec<S> center(int ball) const {
    Vec<S> c(dim);
    for (int a = 0; a < dim; ++a) c[a] = coord(ball, a);
    return c;
  }

  S pair_distance_sq(int i, int j) const {
    S s(0);
    for (int a = 0; a < dim; ++a) {
      const S d = coord(i, a) - coord(j, a);
      s += d * d;
    }
    return s;
  }
};

/// Polyhedral cone {v : <v, nu_i> >= 0} given by unit normals and their Gram
/// matrix. `wall_pairs` carries the ball pair behind each wall when the cone
/// came from a ball configuration.
template <class S>
struct PolyhedralCone {
  int ambient = 0;
  std::vector<Vec<S>> normals;
  Mat<S> gram;
  std::vector<IndexPair> wall_pairs;

  int faces() const { return int(normals.size()); }
};

/// All pairs (i, j), i < j, whose centers are at unit distance within tol,
/// in lexicographic order. Throws OverlapError if any pair is closer than
/// 1 - tol.
template <class S>
std::vector<IndexPair> contact_pairs(const BallConfiguration<S>& config, const S& tol = Tol<S>::contact()) {
  using std::abs;
  using std::sqrt;
  std::vector<IndexPair> out;
  for (int i = 1; i <= config.count; ++i) {
    for (int j = i + 1; j <= config.count; ++j) {
      const S d2 = config.pair_distance_sq(i, j);
      S dist;
      if constexpr (is_exact_v<S>) {
        // Exact mode compares squared distances; contacts are exact.
        if (d2 < S(1)) throw OverlapError("balls " + std::to_string(i) + "," + std::to_string(j) + " overlap");
        if (d2 == S(1)) out.emplace_back(i, j);
        continue;
      } else {
        dist = sqrt(d2);
      }
      if (dist < S(1) - tol)
        throw OverlapError("balls " + std::to_string(i) + "," + std::to_string(j) + " overlap");
      if (abs(dist - S(1)) <= tol) out.emplace_back(i, j);
    }
  }
  return out;
}

/// Contacts of a configuration: the certified list when present, detection
/// otherwise.
template <class S>
std::vector<IndexPair> contacts_of(const BallConfiguration<S>& config, const S& tol = Tol<S>::contact()) {
  if (!config.certified_contacts.empty()) return config.certified_contacts;
  return contact_pairs(config, tol);
}

/// Unit outer normal of the wall |q_i - q_j| = 1 at the configuration point,
/// as a vector in R^{dn}: block i holds (q_i - q_j)/sqrt(2), block j the
/// negative, all other blocks zero.
template <class S>
Vec<S> wall_normal(const BallConfiguration<S>& config, int i, int j, const S& tol = Tol<S>::contact()) {
  static_assert(!is_exact_v<S>, "wall_normal needs sqrt");
  using std::abs;
  using std::sqrt;
  if (i == j || i < 1 || j < 1 || i > config.count || j > config.count)
    throw PreconditionError("wall_normal: bad ball indices");
  const S dist = sqrt(config.pair_distance_sq(i, j));
  if (abs(dist - S(1)) > tol)
    throw PreconditionError("wall_normal: balls " + std::to_string(i) + "," + std::to_string(j) +
                            " are not in contact");
  Vec<S> nu(std::size_t(config.dim) * config.count, S(0));
  const S inv_sqrt2 = S(1) / sqrt(S(2));
  for (int a = 0; a < config.dim; ++a) {
    const S diff = config.coord(i, a) - config.coord(j, a);
    nu[std::size_t(i - 1) * config.dim + a] = diff * inv_sqrt2;
    nu[std::size_t(j - 1) * config.dim + a] = -diff * inv_sqrt2;
  }
  return nu;
}

namespace detail {

// Shared-ball shortcut for <nu_P, nu_Q>: zero for disjoint pairs, otherwise
// half the inner product of the two arms leaving the shared ball.
template <class S>
S gram_entry(const BallConfiguration<S>& config, IndexPair p, IndexPair q) {
  if (p == q) return S(1);
  int shared = 0, px = 0, qx = 0;
  if (p.first == q.first) shared = p.first, px = p.second, qx = q.second;
  else if (p.first == q.second) shared = p.first, px = p.second, qx = q.first;
  else if (p.second == q.first) shared = p.second, px = p.first, qx = q.second;
  else if (p.second == q.second) shared = p.second, px = p.first, qx = q.first;
  else return S(0);
  S s(0);
  for (int a = 0; a < config.dim; ++a)
    s += (config.coord(px, a) - config.coord(shared, a)) * (config.coord(qx, a) - config.coord(shared, a));
  return s / S(2);
}

}  // namespace detail

/// Gram matrix of the contact-wall normals, computed by the shared-ball
/// shortcut and cross-checked against explicit R^{dn} inner products of
/// wall_normal outputs.
template <class S>
Mat<S> gram_of_normals(const BallConfiguration<S>& config, const std::vector<IndexPair>& pairs) {
  using std::abs;
  const int m = int(pairs.size());
  Mat<S> g(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) g(a, b) = detail::gram_entry(config, pairs[a], pairs[b]);
  // Built-in cross-check against the brute-force inner products.
  std::vector<Vec<S>> nus;
  nus.reserve(m);
  for (const auto& p : pairs) nus.push_back(wall_normal(config, p.first, p.second));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const S brute = dot(nus[a], nus[b]);
      if (abs(brute - g(a, b)) > Tol<S>::residual())
        throw NumericError("gram_of_normals: shortcut disagrees with inner products at (" +
                           std::to_string(a + 1) + "," + std::to_string(b + 1) + ")");
    }
  return g;
}

template <class S>
Mat<S> gram_of_normals(const BallConfiguration<S>& config) {
  return gram_of_normals(config, contacts_of(config));
}

/// Tangent cone at a boundary configuration: one wall per contact pair, in
/// lexicographic pair order.
template <class S>
PolyhedralCone<S> tangent_cone(const BallConfiguration<S>& config) {
  PolyhedralCone<S> cone;
  cone.ambient = config.dim * config.count;
  cone.wall_pairs = contacts_of(config);
  for (const auto& p : cone.wall_pairs) cone.normals.push_back(wall_normal(config, p.first, p.second));
  cone.gram = gram_of_normals(config, cone.wall_pairs);
  return cone;
}

template <class S>
bool cone_membership(const PolyhedralCone<S>& cone, const Vec<S>& x, const S& tol = Tol<S>::residual()) {
  if (int(x.size()) != cone.ambient) throw PreconditionError("cone_membership: dimension mismatch");
  for (const auto& nu : cone.normals)
    if (dot(nu, x) < -tol) return false;
  return true;
}

}  // namespace hardball
