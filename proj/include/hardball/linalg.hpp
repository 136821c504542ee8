#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "numeric.hpp"

namespace hardball {

template <class S>
using Vec = std::vector<S>;

template <class S>
struct Mat {
  int rows = 0, cols = 0;
  std::vector<S> a;

  Mat() = default;
  Mat(int r, int c, const S& fill = S(0)) : rows(r), cols(c), a(std::size_t(r) * c, fill) {}

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = S(1);
    return m;
  }

  S& operator()(int r, int c) { return a[std::size_t(r) * cols + c]; }
  const S& operator()(int r, int c) const { return a[std::size_t(r) * cols + c]; }
};

template <class S>
S dot(const Vec<S>& x, const Vec<S>& y) {
  S s(0);
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  return s;
}

template <class S>
S norm_sq(const Vec<S>& x) {
  return dot(x, x);
}

template <class S>
S norm(const Vec<S>& x) {
  static_assert(!is_exact_v<S>, "norm needs sqrt");
  using std::sqrt;
  return sqrt(norm_sq(x));
}

template <class S>
Vec<S> vec_add(Vec<S> x, const Vec<S>& y) {
  for (std::size_t k = 0; k < x.size(); ++k) x[k] += y[k];
  return x;
}

template <class S>
Vec<S> vec_sub(Vec<S> x, const Vec<S>& y) {
  for (std::size_t k = 0; k < x.size(); ++k) x[k] -= y[k];
  return x;
}

template <class S>
Vec<S> vec_scaled(Vec<S> x, const S& c) {
  for (auto& v : x) v *= c;
  return x;
}

// x += c * y
template <class S>
void axpy(const S& c, const Vec<S>& y, Vec<S>& x) {
  for (std::size_t k = 0; k < x.size(); ++k) x[k] += c * y[k];
}

template <class S>
Vec<S> mat_vec(const Mat<S>& m, const Vec<S>& x) {
  Vec<S> y(m.rows, S(0));
  for (int r = 0; r < m.rows; ++r) {
    S s(0);
    for (int c = 0; c < m.cols; ++c) s += m(r, c) * x[c];
    y[r] = s;
  }
  return y;
}

template <class S>
Mat<S> mat_mul(const Mat<S>& l, const Mat<S>& r) {
  Mat<S> y(l.rows, r.cols);
  for (int i = 0; i < l.rows; ++i)
    for (int k = 0; k < l.cols; ++k) {
      const S& v = l(i, k);
      for (int j = 0; j < r.cols; ++j) y(i, j) += v * r(k, j);
    }
  return y;
}

template <class S>
S max_abs_diff(const Mat<S>& l, const Mat<S>& r) {
  using std::abs;
  S best(0);
  for (std::size_t k = 0; k < l.a.size(); ++k) {
    const S d = abs(l.a[k] - r.a[k]);
    if (d > best) best = d;
  }
  return best;
}

/// Gaussian elimination with partial pivoting. Valid for exact scalars as
/// well; the pivot choice only needs an ordering on |.|.
template <class S>
Vec<S> solve_linear(Mat<S> m, Vec<S> b) {
  using std::abs;
  const int n = m.rows;
  if (m.cols != n || int(b.size()) != n) throw PreconditionError("solve_linear: shape mismatch");
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (abs(m(r, col)) > abs(m(piv, col))) piv = r;
    if (m(piv, col) == S(0)) throw NumericError("solve_linear: singular matrix");
    if (piv != col) {
      for (int c = col; c < n; ++c) std::swap(m(piv, c), m(col, c));
      std::swap(b[piv], b[col]);
    }
    for (int r = col + 1; r < n; ++r) {
      const S f = m(r, col) / m(col, col);
      if (f == S(0)) continue;
      for (int c = col; c < n; ++c) m(r, c) -= f * m(col, c);
      b[r] -= f * b[col];
    }
  }
  Vec<S> x(n, S(0));
  for (int r = n - 1; r >= 0; --r) {
    S s = b[r];
    for (int c = r + 1; c < n; ++c) s -= m(r, c) * x[c];
    x[r] = s / m(r, r);
  }
  return x;
}

/// Cholesky factorization of a symmetric positive definite matrix.
template <class S>
struct Cholesky {
  Mat<S> lower;
  bool ok = false;

  explicit Cholesky(const Mat<S>& m) : lower(m.rows, m.cols) {
    static_assert(!is_exact_v<S>, "Cholesky needs sqrt");
    using std::sqrt;
    const int n = m.rows;
    if (m.cols != n) return;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        S s = m(i, j);
        for (int k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
        if (i == j) {
          if (s <= S(0)) return;  // not positive definite
          lower(i, i) = sqrt(s);
        } else {
          lower(i, j) = s / lower(j, j);
        }
      }
    }
    ok = true;
  }

  Vec<S> solve(const Vec<S>& b) const {
    const int n = lower.rows;
    Vec<S> y(n, S(0));
    for (int i = 0; i < n; ++i) {
      S s = b[i];
      for (int k = 0; k < i; ++k) s -= lower(i, k) * y[k];
      y[i] = s / lower(i, i);
    }
    Vec<S> x(n, S(0));
    for (int i = n - 1; i >= 0; --i) {
      S s = y[i];
      for (int k = i + 1; k < n; ++k) s -= lower(k, i) * x[k];
      x[i] = s / lower(i, i);
    }
    return x;
  }
};

template <class S>
struct SymEigen {
  Vec<S> values;
  Mat<S> vectors;  // eigenvectors as columns
};

/// Cyclic Jacobi iteration; fine for the small symmetric matrices used here.
template <class S>
SymEigen<S> jacobi_eigen(Mat<S> m, int max_sweeps = 64) {
  static_assert(!is_exact_v<S>, "jacobi_eigen needs sqrt");
  using std::abs;
  using std::sqrt;
  const int n = m.rows;
  if (m.cols != n) throw PreconditionError("jacobi_eigen: square matrix required");
  Mat<S> v = Mat<S>::identity(n);
  const S tiny = Tol<S>::eps() * S(n) * S(n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    S off(0);
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += abs(m(p, q));
    if (off <= tiny) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (abs(m(p, q)) <= tiny / S(n * n + 1)) continue;
        const S theta = (m(q, q) - m(p, p)) / (S(2) * m(p, q));
        S t;
        if (theta >= S(0))
          t = S(1) / (theta + sqrt(S(1) + theta * theta));
        else
          t = S(-1) / (-theta + sqrt(S(1) + theta * theta));
        const S c = S(1) / sqrt(S(1) + t * t);
        const S s = t * c;
        for (int k = 0; k < n; ++k) {
          const S mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const S mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        for (int k = 0; k < n; ++k) {
          const S vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  SymEigen<S> out;
  out.values.resize(n);
  for (int i = 0; i < n; ++i) out.values[i] = m(i, i);
  out.vectors = v;
  return out;
}

/// Symmetric square root F of a positive definite matrix, F * F = m.
template <class S>
Mat<S> spectral_sqrt(const Mat<S>& m) {
  using std::sqrt;
  SymEigen<S> eig = jacobi_eigen(m);
  const int n = m.rows;
  for (int i = 0; i < n; ++i)
    if (eig.values[i] <= S(0)) throw NumericError("spectral_sqrt: matrix not positive definite");
  Mat<S> f(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      S s(0);
      for (int k = 0; k < n; ++k) s += eig.vectors(i, k) * sqrt(eig.values[k]) * eig.vectors(j, k);
      f(i, j) = s;
    }
  return f;
}

}  // namespace hardball
