#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "linalg.hpp"
#include "numeric.hpp"

namespace hardball {

// ---------------------------------------------------------------------------
// Edge set and admissible matrices
// ---------------------------------------------------------------------------

/// Membership predicate of the edge set: (i, j) with j = i + 1, or i odd and
/// j = i + 2. Indices are 1-based; the parity is part of the definition.
inline bool edge_in_E(int i, int j) {
  return j == i + 1 || (i % 2 == 1 && j == i + 2);
}

struct EdgeSet {
  int m = 0;
  std::vector<IndexPair> pairs;  // 1-based, lexicographic

  bool contains(int i, int j) const {
    if (i > j) std::swap(i, j);
    return i >= 1 && j <= m && edge_in_E(i, j);
  }
};

inline EdgeSet edge_set(int m) {
  if (m < 1) throw PreconditionError("edge_set: m >= 1 required");
  EdgeSet e;
  e.m = m;
  for (int i = 1; i <= m; ++i)
    for (int j = i + 1; j <= m; ++j)
      if (edge_in_E(i, j)) e.pairs.emplace_back(i, j);
  return e;
}

/// Square matrix with unit diagonal; drives the reflection rule.
template <class S>
struct AdmissibleMatrix {
  int m = 0;
  std::vector<S> entries;  // row-major

  AdmissibleMatrix() = default;
  explicit AdmissibleMatrix(int mm) : m(mm), entries(std::size_t(mm) * mm, S(0)) {
    for (int i = 0; i < mm; ++i) (*this)(i, i) = S(1);
  }

  S& operator()(int r, int c) { return entries[std::size_t(r) * m + c]; }
  const S& operator()(int r, int c) const { return entries[std::size_t(r) * m + c]; }

  template <class S2>
  AdmissibleMatrix<S2> cast() const {
    AdmissibleMatrix<S2> out(m);
    for (std::size_t k = 0; k < entries.size(); ++k) out.entries[k] = scalar_cast<S2>(entries[k]);
    return out;
  }
};

/// Upper-triangular matrix with 1 on the diagonal and -1 on the edge set.
template <class S>
AdmissibleMatrix<S> build_Am(int m) {
  if (m < 1) throw PreconditionError("build_Am: m >= 1 required");
  AdmissibleMatrix<S> a(m);
  for (int i = 1; i <= m; ++i)
    for (int j = i + 1; j <= m; ++j)
      if (edge_in_E(i, j)) a(i - 1, j - 1) = S(-1);
  return a;
}

/// One-sided perturbation: the transposed edge positions carry
/// -lambda_i^2 / lambda_j^2 instead of zero.
template <class S>
AdmissibleMatrix<S> build_Atilde(int m, const Vec<S>& lambda) {
  if (int(lambda.size()) != m) throw PreconditionError("build_Atilde: lambda size != m");
  for (const S& l : lambda)
    if (!(l > S(0))) throw PreconditionError("build_Atilde: lambda must be strictly positive");
  AdmissibleMatrix<S> a = build_Am<S>(m);
  for (int j = 1; j <= m; ++j)
    for (int i = j + 1; i <= m; ++i)
      if (edge_in_E(j, i)) {
        const S r = lambda[i - 1] / lambda[j - 1];
        a(i - 1, j - 1) = -(r * r);
      }
  return a;
}

/// Entrywise maximum norm of the difference; reports how far a perturbed
/// matrix sits from its reference.
template <class S>
S max_norm_diff(const AdmissibleMatrix<S>& a, const AdmissibleMatrix<S>& b) {
  using std::abs;
  S best(0);
  for (std::size_t k = 0; k < a.entries.size(); ++k) {
    const S d = abs(a.entries[k] - b.entries[k]);
    if (d > best) best = d;
  }
  return best;
}

/// a^lambda_ij = (lambda_j / lambda_i) a_ij. Unit diagonal is preserved.
template <class S>
AdmissibleMatrix<S> rescale(const AdmissibleMatrix<S>& a, const Vec<S>& lambda) {
  if (int(lambda.size()) != a.m) throw PreconditionError("rescale: lambda size != m");
  for (const S& l : lambda)
    if (!(l > S(0))) throw PreconditionError("rescale: lambda must be strictly positive");
  AdmissibleMatrix<S> out(a.m);
  for (int i = 0; i < a.m; ++i)
    for (int j = 0; j < a.m; ++j) out(i, j) = lambda[j] / lambda[i] * a(i, j);
  return out;
}

/// Total root count of the inductive construction, closed form. Also checks
/// the bound N >= 2^k with k = floor((m+1)/2), which holds for m >= 2.
inline long long collision_count_formula(int m) {
  if (m < 2) throw PreconditionError("collision_count_formula: m >= 2 required");
  if (m > 60) throw PreconditionError("collision_count_formula: m too large for 64-bit count");
  const int k = (m + 1) / 2;
  long long n = 0;
  if (m % 2 == 1)
    n = (1LL << (k + 2)) + (1LL << (k - 1)) - 3LL * k - 5;
  else
    n = (1LL << (k + 2)) + (1LL << (k + 1)) - 3LL * k - 6;
  if (n < (1LL << k)) throw NumericError("collision_count_formula: bound N >= 2^k failed");
  return n;
}

// ---------------------------------------------------------------------------
// Piecewise linear trajectories
// ---------------------------------------------------------------------------

/// Piecewise linear map into R_+^m: start values, a slope vector per segment,
/// and the break times in between. Breaks are collision moments.
template <class S>
struct PLTrajectory {
  struct Event {
    S time;
    Vec<S> post_slopes;
  };

  S t_start{};
  S t_end{};
  Vec<S> start_values;
  Vec<S> start_slopes;
  std::vector<Event> events;

  int coords() const { return int(start_values.size()); }

  const Vec<S>& slopes_before(int event_index) const {
    return event_index == 0 ? start_slopes : events[event_index - 1].post_slopes;
  }

  const Vec<S>& final_slopes() const {
    return events.empty() ? start_slopes : events.back().post_slopes;
  }

  /// Values at time t by sweeping segments from the left end.
  Vec<S> values_at(const S& t) const {
    Vec<S> v = start_values;
    S cur = t_start;
    const Vec<S>* slopes = &start_slopes;
    for (const auto& e : events) {
      if (e.time >= t) break;
      const S dt = e.time - cur;
      for (int i = 0; i < coords(); ++i) v[i] += dt * (*slopes)[i];
      cur = e.time;
      slopes = &e.post_slopes;
    }
    const S dt = t - cur;
    for (int i = 0; i < coords(); ++i) v[i] += dt * (*slopes)[i];
    return v;
  }

  /// Slopes on the segment containing t (the segment to the right of the
  /// last event at or before t).
  Vec<S> slopes_at(const S& t) const {
    const Vec<S>* slopes = &start_slopes;
    for (const auto& e : events) {
      if (e.time > t) break;
      slopes = &e.post_slopes;
    }
    return *slopes;
  }

  S min_event_gap() const {
    if (events.size() < 2) return t_end - t_start;
    S best = events[1].time - events[0].time;
    for (std::size_t k = 2; k < events.size(); ++k) {
      const S g = events[k].time - events[k - 1].time;
      if (g < best) best = g;
    }
    return best;
  }

  /// Coordinatewise scaling g_i = c_i f_i; slopes scale the same way.
  PLTrajectory scaled_coordinates(const Vec<S>& c) const {
    PLTrajectory out = *this;
    for (int i = 0; i < coords(); ++i) {
      out.start_values[i] *= c[i];
      out.start_slopes[i] *= c[i];
    }
    for (auto& e : out.events)
      for (int i = 0; i < coords(); ++i) e.post_slopes[i] *= c[i];
    return out;
  }

  template <class S2>
  PLTrajectory<S2> cast() const {
    PLTrajectory<S2> out;
    out.t_start = scalar_cast<S2>(t_start);
    out.t_end = scalar_cast<S2>(t_end);
    for (const auto& v : start_values) out.start_values.push_back(scalar_cast<S2>(v));
    for (const auto& v : start_slopes) out.start_slopes.push_back(scalar_cast<S2>(v));
    for (const auto& e : events) {
      typename PLTrajectory<S2>::Event e2;
      e2.time = scalar_cast<S2>(e.time);
      for (const auto& v : e.post_slopes) e2.post_slopes.push_back(scalar_cast<S2>(v));
      out.events.push_back(std::move(e2));
    }
    return out;
  }
};

/// Finite arithmetic progression of roots of one coordinate.
struct ProgressionSpec {
  Rational first{0};
  Rational diff{1};
  long long len = 0;

  Rational element(long long s) const { return first + Rational(s) * diff; }
  Rational last() const { return element(len - 1); }

  Rational dist_to(const Rational& t) const {
    using boost::multiprecision::abs;
    if (len <= 0) throw PreconditionError("ProgressionSpec: empty progression");
    if (t <= first) return first - t;
    if (t >= last()) return t - last();
    // nearest index: floor((t - first)/diff + 1/2)
    const Rational x = (t - first) / diff + Rational(1, 2);
    BigInt fl = numerator(x) / denominator(x);
    if (x < 0 && Rational(fl) != x) fl -= 1;
    long long s = fl.convert_to<long long>();
    s = std::max(0LL, std::min(len - 1, s));
    Rational best = abs(t - element(s));
    for (long long k = std::max(0LL, s - 1); k <= std::min(len - 1, s + 1); ++k) {
      const Rational d = abs(t - element(k));
      if (d < best) best = d;
    }
    return best;
  }

  bool contains(const Rational& t) const {
    if (len <= 0 || t < first || t > last()) return false;
    const Rational x = (t - first) / diff;
    return denominator(x) == 1;
  }
};

struct RootSchedule {
  std::vector<ProgressionSpec> progressions;  // index 0 holds coordinate 1

  long long total() const {
    long long n = 0;
    for (const auto& p : progressions) n += p.len;
    return n;
  }
};

// ---------------------------------------------------------------------------
// Inductive construction
// ---------------------------------------------------------------------------

struct InductiveResult {
  PLTrajectory<Rational> trajectory;
  RootSchedule schedule;
};

/// The zig-zag family f_i(t) = dist(t, T_i). Coordinate 1 starts from the
/// single root {0}; each even step interleaves a shifted copy of the previous
/// odd progression, each odd step halves the common difference. All slopes
/// are +-1 and the result is a generalized trajectory for the edge matrix.
inline InductiveResult build_inductive(int m) {
  if (m < 1) throw PreconditionError("build_inductive: m >= 1 required");
  RootSchedule sched;
  sched.progressions.push_back({Rational(0), Rational(1), 1});
  // base = most recent odd-index progression
  ProgressionSpec base = sched.progressions[0];
  while (int(sched.progressions.size()) < m) {
    const Rational beta = base.diff;
    const long long big_m = base.len;
    // even step: y_s = x_1 + (s - 3/2) beta, s = 1..M+1
    ProgressionSpec even;
    even.first = base.first - beta / 2;
    even.diff = beta;
    even.len = big_m + 1;
    sched.progressions.push_back(even);
    if (int(sched.progressions.size()) == m) break;
    // odd step: z_s = y_1 + (s - 3/2) beta/2, s = 1..2M+2
    ProgressionSpec odd;
    odd.first = even.first - beta / 4;
    odd.diff = beta / 2;
    odd.len = 2 * big_m + 2;
    sched.progressions.push_back(odd);
    base = odd;
  }

  // Assemble the trajectory. Every break point of dist(t, T_i) is a root of
  // some coordinate, so the global event list is the union of the roots.
  const Rational margin = sched.progressions.back().diff;
  Rational lo = sched.progressions[0].first;
  Rational hi = sched.progressions[0].last();
  for (const auto& p : sched.progressions) {
    lo = std::min(lo, p.first);
    hi = std::max(hi, p.last());
  }
  std::vector<Rational> times;
  for (const auto& p : sched.progressions)
    for (long long s = 0; s < p.len; ++s) times.push_back(p.element(s));
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  PLTrajectory<Rational> f;
  f.t_start = lo - margin;
  f.t_end = hi + margin;
  f.start_values.resize(m);
  f.start_slopes.assign(m, Rational(-1));
  for (int i = 0; i < m; ++i) f.start_values[i] = sched.progressions[i].dist_to(f.t_start);

  auto slope_at = [&](int i, const Rational& t) -> Rational {
    // slope of dist(., T_i) on the segment containing t (t not a break)
    const auto& p = sched.progressions[i];
    if (t < p.first) return Rational(-1);
    if (t > p.last()) return Rational(1);
    // inside: +1 just after a root until the midpoint, then -1
    const Rational x = (t - p.first) / p.diff;
    BigInt fl = numerator(x) / denominator(x);
    const Rational left = p.element(fl.convert_to<long long>());
    return (t - left <= p.diff / 2) ? Rational(1) : Rational(-1);
  };

  for (std::size_t k = 0; k < times.size(); ++k) {
    typename PLTrajectory<Rational>::Event e;
    e.time = times[k];
    const Rational probe =
        (k + 1 < times.size()) ? (times[k] + times[k + 1]) / 2 : (times[k] + f.t_end) / 2;
    e.post_slopes.resize(m);
    for (int i = 0; i < m; ++i) e.post_slopes[i] = slope_at(i, probe);
    f.events.push_back(std::move(e));
  }

  return {std::move(f), std::move(sched)};
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class TrajectoryKind { genuine, generalized };

template <class S>
struct ValidationReport {
  bool pass = false;
  bool structural_failure = false;
  std::string message;
  long long collisions = 0;
  std::vector<long long> roots_per_coordinate;
  bool all_singleton = true;

  struct EventInfo {
    S time;
    std::vector<int> vanished;  // 0-based coordinate offsets
  };
  std::vector<EventInfo> event_info;
};

namespace detail {

// Rule (generalized form): v_j' = v_j - 2 sum_{i in S} a_ij v_i, with the
// pre-event slopes on the right-hand side.
template <class S>
Vec<S> reflected_slopes(const AdmissibleMatrix<S>& a, const std::vector<int>& vanished, const Vec<S>& pre) {
  Vec<S> post = pre;
  for (int j = 0; j < a.m; ++j) {
    S kick(0);
    for (int i : vanished) kick += a(i, j) * pre[i];
    post[j] -= S(2) * kick;
  }
  return post;
}

template <class S>
bool simultaneous_ok(const AdmissibleMatrix<S>& a, const std::vector<int>& vanished) {
  for (std::size_t p = 0; p < vanished.size(); ++p)
    for (std::size_t q = p + 1; q < vanished.size(); ++q) {
      const int i = vanished[p], j = vanished[q];
      if (!(a(i, j) == S(0) && a(j, i) == S(0))) return false;
    }
  return true;
}

}  // namespace detail

/// Checks a stored trajectory against the reflection rule for A: domain and
/// event ordering, nonnegativity, per-event vanishing sets, the slope rule,
/// and collision-free endpoints. Structural corruption is reported apart
/// from rule violations. Thresholds scale with the magnitude each
/// coordinate actually attains; the slope rule is always checked against
/// the detected vanishing set.
template <class S>
ValidationReport<S> validate(const PLTrajectory<S>& f, const AdmissibleMatrix<S>& a, TrajectoryKind kind,
                             const S& tol = Tol<S>::residual()) {
  using std::abs;
  ValidationReport<S> rep;
  const int m = f.coords();
  rep.roots_per_coordinate.assign(std::size_t(std::max(m, 0)), 0);

  auto fail = [&](bool structural, std::string msg) {
    rep.pass = false;
    rep.structural_failure = structural;
    rep.message = std::move(msg);
    return rep;
  };

  if constexpr (is_exact_v<S>) {
    if (tol != S(0)) return fail(true, "exact mode requires tol == 0");
  }
  if (m < 1 || a.m != m) return fail(true, "coordinate count mismatch");
  if (int(f.start_slopes.size()) != m) return fail(true, "slope vector size mismatch");
  if (!(f.t_start < f.t_end)) return fail(true, "empty or reversed domain");
  S prev = f.t_start;
  for (std::size_t k = 0; k < f.events.size(); ++k) {
    if (int(f.events[k].post_slopes.size()) != m) return fail(true, "event slope size mismatch");
    if (!(f.events[k].time > prev))
      return fail(true, "events not strictly increasing at index " + std::to_string(k));
    prev = f.events[k].time;
  }
  if (!f.events.empty() && !(f.events.back().time < f.t_end))
    return fail(true, "event at or beyond domain end");

  // Pre-pass: per-coordinate value scales and the global slope scale.
  Vec<S> val_scale(m, S(1));
  S slope_scale(1);
  {
    Vec<S> vals = f.start_values;
    S cur = f.t_start;
    const Vec<S>* slopes = &f.start_slopes;
    auto absorb = [&] {
      for (int i = 0; i < m; ++i)
        if (abs(vals[i]) > val_scale[i]) val_scale[i] = abs(vals[i]);
      for (int i = 0; i < m; ++i)
        if (abs((*slopes)[i]) > slope_scale) slope_scale = abs((*slopes)[i]);
    };
    absorb();
    for (const auto& e : f.events) {
      const S dt = e.time - cur;
      for (int i = 0; i < m; ++i) vals[i] += dt * (*slopes)[i];
      cur = e.time;
      slopes = &e.post_slopes;
      absorb();
    }
  }
  auto vanish_tol = [&](int i) { return tol * val_scale[i]; };
  const S rule_tol = tol * slope_scale;

  Vec<S> vals = f.start_values;
  for (int i = 0; i < m; ++i)
    if (!(vals[i] > vanish_tol(i)))
      return fail(false, "coordinate " + std::to_string(i + 1) + " vanishes at domain start");

  S cur = f.t_start;
  const Vec<S>* slopes = &f.start_slopes;
  for (std::size_t k = 0; k < f.events.size(); ++k) {
    const auto& e = f.events[k];
    const S dt = e.time - cur;
    for (int i = 0; i < m; ++i) vals[i] += dt * (*slopes)[i];

    std::vector<int> vanished;
    for (int i = 0; i < m; ++i) {
      if (vals[i] < -vanish_tol(i))
        return fail(false, "coordinate " + std::to_string(i + 1) + " negative at event " + std::to_string(k));
      if (abs(vals[i]) <= vanish_tol(i)) vanished.push_back(i);
    }
    if (vanished.empty()) return fail(true, "event " + std::to_string(k) + " has no vanishing coordinate");
    for (int i : vanished) {
      if ((*slopes)[i] == S(0))
        return fail(false, "coordinate " + std::to_string(i + 1) + " rests at zero at event " + std::to_string(k));
      vals[i] = S(0);  // suppress roundoff drift through the root
    }

    if (kind == TrajectoryKind::genuine && vanished.size() != 1)
      return fail(false, "simultaneous vanishing at event " + std::to_string(k) + " in genuine mode");
    if (kind == TrajectoryKind::generalized && !detail::simultaneous_ok(a, vanished))
      return fail(false, "simultaneous vanishing with nonzero couplings at event " + std::to_string(k));

    const Vec<S> expect = detail::reflected_slopes(a, vanished, *slopes);
    for (int j = 0; j < m; ++j)
      if (abs(e.post_slopes[j] - expect[j]) > rule_tol)
        return fail(false, "reflection rule violated at event " + std::to_string(k) + ", coordinate " +
                               std::to_string(j + 1));

    rep.collisions += (long long)vanished.size();
    if (vanished.size() != 1) rep.all_singleton = false;
    for (int i : vanished) rep.roots_per_coordinate[i] += 1;
    rep.event_info.push_back({e.time, vanished});

    cur = e.time;
    slopes = &e.post_slopes;
  }

  const S dt = f.t_end - cur;
  for (int i = 0; i < m; ++i) {
    vals[i] += dt * (*slopes)[i];
    if (!(vals[i] > vanish_tol(i)))
      return fail(false, "coordinate " + std::to_string(i + 1) + " vanishes at domain end");
  }

  rep.pass = true;
  return rep;
}

// ---------------------------------------------------------------------------
// Event-driven propagation
// ---------------------------------------------------------------------------

/// Forward integrator for the reflection dynamics: advance straight to the
/// earliest vanishing set, reflect, repeat until t_end. Exact in rational
/// mode. Simultaneous vanishing is accepted only where the matrix couplings
/// vanish both ways; otherwise the trajectory is undefined and a
/// SingularEventError is thrown.
template <class S>
PLTrajectory<S> propagate(const AdmissibleMatrix<S>& a, Vec<S> x, Vec<S> v, const S& t_start, const S& t_end,
                          long long max_events = (1LL << 20)) {
  const int m = a.m;
  if (int(x.size()) != m || int(v.size()) != m) throw PreconditionError("propagate: size mismatch");
  for (int i = 0; i < m; ++i)
    if (!(x[i] > S(0))) throw PreconditionError("propagate: start values must be strictly positive");
  if (!(t_start < t_end)) throw PreconditionError("propagate: empty domain");

  const S gap = Tol<S>::event_gap();
  PLTrajectory<S> f;
  f.t_start = t_start;
  f.t_end = t_end;
  f.start_values = x;
  f.start_slopes = v;

  S t = t_start;
  while (true) {
    // earliest root over coordinates moving down
    std::optional<S> dt_min;
    for (int i = 0; i < m; ++i) {
      if (v[i] < S(0)) {
        if (!(x[i] > S(0))) throw NumericError("propagate: nonpositive value while descending");
        const S dt = -x[i] / v[i];
        if (!dt_min || dt < *dt_min) dt_min = dt;
      }
    }
    if (!dt_min) break;
    const S t_event = t + *dt_min;
    if (t_event >= t_end - gap) {
      // Root at or just past the requested end: trim the domain so the end
      // stays collision-free.
      if (t_event <= t_end + gap) {
        const S anchor = f.events.empty() ? f.t_start : f.events.back().time;
        f.t_end = (anchor + std::min(t_event, t_end)) / S(2);
      }
      break;
    }
    if (!f.events.empty() && t_event - f.events.back().time < gap)
      throw SingularEventError("propagate: events closer than resolution near t = " +
                               std::to_string(scalar_cast<double>(t_event)));

    std::vector<int> vanished;
    for (int i = 0; i < m; ++i) {
      if (v[i] < S(0)) {
        const S dt = -x[i] / v[i];
        if (dt - *dt_min <= gap) vanished.push_back(i);
      }
    }
    if (!detail::simultaneous_ok(a, vanished))
      throw SingularEventError("propagate: simultaneous vanishing with nonzero couplings at t = " +
                               std::to_string(scalar_cast<double>(t_event)));

    for (int i = 0; i < m; ++i) x[i] += *dt_min * v[i];
    for (int i : vanished) x[i] = S(0);
    v = detail::reflected_slopes(a, vanished, v);
    f.events.push_back({t_event, v});
    t = t_event;
    if ((long long)f.events.size() > max_events) throw NumericError("propagate: event cap exceeded");
  }
  return f;
}

// ---------------------------------------------------------------------------
// De-generalization
// ---------------------------------------------------------------------------

/// Default initial-data jitter: a small fraction of the shortest event gap,
/// scaled by the working precision.
template <class S>
S default_jitter(const S& min_event_gap) {
  using std::sqrt;
  static_assert(!is_exact_v<S>, "jitter is only meaningful in float mode");
  return min_event_gap * sqrt(Tol<S>::eps()) / S(16);
}

/// Perturbs a generalized trajectory into a genuine one with the same total
/// collision count: jitter the initial data at a point before the first
/// collision, propagate, and accept once all roots are distinct and the
/// result validates. Bounded retries with fresh draws.
template <class S, class SIn>
PLTrajectory<S> perturb_to_genuine(const PLTrajectory<SIn>& f, const AdmissibleMatrix<SIn>& a_in,
                                   const S& jitter, std::uint64_t seed, int max_attempts = 64) {
  static_assert(!is_exact_v<S>, "output scalar must be a floating type");
  if (jitter < S(0)) throw PreconditionError("perturb_to_genuine: jitter must be nonnegative");

  const auto rep = validate<SIn>(f, a_in, TrajectoryKind::generalized, Tol<SIn>::residual());
  if (!rep.pass) throw PreconditionError("perturb_to_genuine: input invalid: " + rep.message);
  if (rep.event_info.empty()) throw PreconditionError("perturb_to_genuine: input has no collisions");
  const long long n_total = rep.collisions;

  const AdmissibleMatrix<S> a = a_in.template cast<S>();

  if (jitter == S(0) && rep.all_singleton) {
    // Already genuine; nothing to perturb.
    return f.template cast<S>();
  }

  // Launch point strictly before the first collision, landing point strictly
  // after the last one.
  const SIn tau0_in = (f.t_start + rep.event_info.front().time) / SIn(2);
  const SIn tauM_in = (rep.event_info.back().time + f.t_end) / SIn(2);
  const S tau0 = scalar_cast<S>(tau0_in);
  const S tauM = scalar_cast<S>(tauM_in);

  Vec<S> x0, v0;
  {
    const Vec<SIn> xv = f.values_at(tau0_in);
    const Vec<SIn> sv = f.slopes_at(tau0_in);
    for (const auto& x : xv) x0.push_back(scalar_cast<S>(x));
    for (const auto& s : sv) v0.push_back(scalar_cast<S>(s));
  }

  std::string last_failure = "no attempts made";
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng(mix_seed(seed, std::uint64_t(attempt)));
    Vec<S> x = x0, v = v0;
    for (int i = 0; i < int(x.size()); ++i) {
      x[i] += rng.uniform_pm<S>(jitter);
      v[i] += rng.uniform_pm<S>(jitter);
    }
    PLTrajectory<S> g;
    try {
      g = propagate<S>(a, x, v, tau0, tauM);
    } catch (const Error& e) {
      last_failure = e.what();
      continue;
    }
    const auto out = validate<S>(g, a, TrajectoryKind::genuine, Tol<S>::residual());
    if (!out.pass) {
      last_failure = out.message;
      continue;
    }
    if (out.collisions != n_total) {
      last_failure = "collision count changed: " + std::to_string(out.collisions) + " vs " +
                     std::to_string(n_total);
      continue;
    }
    return g;
  }
  throw NumericError("perturb_to_genuine: no genuine trajectory after " + std::to_string(max_attempts) +
                     " attempts (jitter may be too small or too large); last failure: " + last_failure);
}

// ---------------------------------------------------------------------------
// Empirical stability radius
// ---------------------------------------------------------------------------

/// Largest verified entrywise perturbation norm under which propagating the
/// given genuine trajectory's initial data through the perturbed matrix
/// keeps all collisions. The norm is realized by one-sided edge
/// perturbations with a geometric weight vector, so norm s corresponds to an
/// adjacent weight ratio sqrt(s).
template <class S>
S find_delta(int m, const PLTrajectory<S>& genuine, long long n_target, int refine_steps = 24) {
  static_assert(!is_exact_v<S>, "find_delta runs in float mode");
  using std::sqrt;
  const S t0 = genuine.t_start;
  const Vec<S> x0 = genuine.start_values;
  const Vec<S> v0 = genuine.start_slopes;

  auto works = [&](const S& s) -> bool {
    const S rho = sqrt(s);
    Vec<S> lambda(m);
    S cur(1);
    for (int i = 0; i < m; ++i) {
      lambda[i] = cur;
      cur *= rho;
    }
    const AdmissibleMatrix<S> at = build_Atilde<S>(m, lambda);
    try {
      const PLTrajectory<S> g = propagate<S>(at, x0, v0, t0, genuine.t_end);
      const auto rep = validate<S>(g, at, TrajectoryKind::generalized, Tol<S>::residual());
      return rep.pass && rep.collisions == n_target;
    } catch (const Error&) {
      return false;
    }
  };

  S lo(0), hi(1);
  S s = S(1) / S(4);
  while (!works(s)) {
    s /= S(4);
    if (s < S(1e-12)) return S(0);
  }
  lo = s;
  hi = std::min(S(1), s * S(4));
  for (int it = 0; it < refine_steps; ++it) {
    const S mid = (lo + hi) / S(2);
    if (works(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace hardball
