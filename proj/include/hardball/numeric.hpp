#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>

namespace hardball {

/// Ball / wall / segment identifiers, 1-based throughout.
using IndexPair = std::pair<int, int>;

// Scalar tower: exact rationals for constructions that must be checked with
// equality, binary floats of increasing width for everything that needs
// sqrt/trig or perturbed data.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;
using Float113 = boost::multiprecision::cpp_bin_float_quad;
using Float237 = boost::multiprecision::cpp_bin_float_oct;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Bad arguments or a violated call precondition.
struct PreconditionError : Error {
  using Error::Error;
};
/// Two balls closer than one diameter where the model forbids it.
struct OverlapError : Error {
  using Error::Error;
};
/// Simultaneous events the dynamics cannot resolve (singular hit).
struct SingularEventError : Error {
  using Error::Error;
};
/// Numeric failure: factorization, residual check, retries exhausted.
struct NumericError : Error {
  using Error::Error;
};

template <class S>
struct is_exact_scalar : std::false_type {};
template <>
struct is_exact_scalar<Rational> : std::true_type {};
template <class S>
inline constexpr bool is_exact_v = is_exact_scalar<S>::value;

template <class S>
constexpr int precision_bits() {
  if constexpr (is_exact_v<S>)
    return 0;  // exact arithmetic, no fixed mantissa
  else
    return std::numeric_limits<S>::digits;
}

template <class S>
inline std::string scalar_name() {
  if constexpr (is_exact_v<S>)
    return "rational";
  else if constexpr (std::is_same_v<S, double>)
    return "double";
  else
    return "binfloat" + std::to_string(precision_bits<S>());
}

// Tolerance policy. The double column carries the project defaults;
// wider types scale with their machine epsilon. Exact mode uses zeros so
// every comparison degenerates to equality.
template <class S>
struct Tol {
  static S eps() { return std::numeric_limits<S>::epsilon(); }
  /// Contact detection half-width on |q_i - q_j| - 1.
  static S contact() { return eps() * S(1e7); }
  /// Two event times closer than this count as simultaneous.
  static S event_gap() { return eps() * S(1e4); }
  /// Residual bound for reflection rules, conservation laws, Gram checks.
  static S residual() { return eps() * S(1e4); }
  /// Round-trip bound for lifting trajectories out of Gram coordinates.
  static S lift() { return eps() * S(1e6); }
};

template <>
struct Tol<double> {
  static double eps() { return std::numeric_limits<double>::epsilon(); }
  static double contact() { return 1e-9; }
  static double event_gap() { return 1e-12; }
  static double residual() { return 1e-12; }
  static double lift() { return 1e-10; }
};

template <>
struct Tol<Rational> {
  static Rational eps() { return 0; }
  static Rational contact() { return 0; }
  static Rational event_gap() { return 0; }
  static Rational residual() { return 0; }
  static Rational lift() { return 0; }
};

template <class S>
inline S pi_value() {
  static_assert(!is_exact_v<S>, "pi is not rational");
  using std::acos;
  static const S v = acos(S(-1));
  return v;
}

template <class To, class From>
inline To scalar_cast(const From& x) {
  if constexpr (std::is_same_v<To, From>) {
    return x;
  } else if constexpr (std::is_same_v<From, Rational>) {
    // Evaluate numerator/denominator in the target type so huge integers
    // round once instead of overflowing an intermediate.
    const To num = To(numerator(x));
    const To den = To(denominator(x));
    return num / den;
  } else {
    return To(x);
  }
}

template <class S>
inline S pow2(int e) {
  S v(1);
  const S two(2);
  const S half = S(1) / two;
  for (int i = 0; i < e; ++i) v *= two;
  for (int i = 0; i > e; --i) v *= half;
  return v;
}

/// Deterministic 64-bit generator; all floating draws consume exactly one
/// engine step so sequences agree across scalar types.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  template <class S>
  S unit() {  // uniform in [0, 1)
    const std::uint64_t u = eng_();
    return S(u) / two64<S>();
  }

  template <class S>
  S uniform_pm(const S& half_width) {
    return (S(2) * unit<S>() - S(1)) * half_width;
  }

  template <class S>
  S uniform(const S& lo, const S& hi) {
    return lo + (hi - lo) * unit<S>();
  }

 private:
  template <class S>
  static const S& two64() {
    static const S v = S(65536) * S(65536) * S(65536) * S(65536);
    return v;
  }
  std::mt19937_64 eng_;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  return x;
}

}  // namespace hardball
