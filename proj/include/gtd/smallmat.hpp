#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "gtd/errors.hpp"
#include "gtd/jet.hpp"

namespace gtd {

// Dense matrices of the tiny sizes this library needs (n x n with n <= ~9),
// templated on the scalar so the same code runs on doubles and on jets.
template <class T>
struct Mat {
  int rows = 0, cols = 0;
  std::vector<T> a;

  Mat() = default;
  Mat(int r, int c, const T& zero) : rows(r), cols(c), a(static_cast<size_t>(r) * c, zero) {}

  T& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  const T& operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
};

using Matd = Mat<double>;

inline Matd mat_zeros(int r, int c) { return Matd(r, c, 0.0); }

inline Matd mat_identity(int n) {
  Matd m = mat_zeros(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

template <class T>
Mat<T> matmul(const Mat<T>& x, const Mat<T>& y, const T& zero) {
  Mat<T> out(x.rows, y.cols, zero);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k)
      for (int j = 0; j < y.cols; ++j) out(i, j) += x(i, k) * y(k, j);
  return out;
}

inline Matd matmul(const Matd& x, const Matd& y) { return matmul(x, y, 0.0); }

inline Matd transpose(const Matd& m) {
  Matd out = mat_zeros(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
  return out;
}

inline double max_abs(const Matd& m) {
  double s = 0.0;
  for (double v : m.a) s = std::max(s, std::abs(v));
  return s;
}

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const Jet& v) { return std::abs(v.value()); }

// Gauss-Jordan inverse with partial pivoting; pivots are compared by the
// scalar's magnitude (value part for jets). Returns false on an exactly zero
// pivot; thresholding against scale is the caller's job.
template <class T>
bool invert(const Mat<T>& m, Mat<T>& inv, T& det, const T& zero, const T& one) {
  const int n = m.rows;
  Mat<T> w = m;
  inv = Mat<T>(n, n, zero);
  for (int i = 0; i < n; ++i) inv(i, i) = one;
  det = one;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = magnitude(w(col, col));
    for (int r = col + 1; r < n; ++r) {
      double cand = magnitude(w(r, col));
      if (cand > best) {
        best = cand;
        piv = r;
      }
    }
    if (best == 0.0) return false;
    if (piv != col) {
      for (int j = 0; j < n; ++j) {
        std::swap(w(piv, j), w(col, j));
        std::swap(inv(piv, j), inv(col, j));
      }
      det = -det;
    }
    det = det * w(col, col);
    T ipiv = one / w(col, col);
    for (int j = 0; j < n; ++j) {
      w(col, j) = w(col, j) * ipiv;
      inv(col, j) = inv(col, j) * ipiv;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      T f = w(r, col);
      if (magnitude(f) == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        w(r, j) = w(r, j) - f * w(col, j);
        inv(r, j) = inv(r, j) - f * inv(col, j);
      }
    }
  }
  return true;
}

inline double determinant(const Matd& m) {
  Matd inv;
  double det = 0.0;
  if (!invert(m, inv, det, 0.0, 1.0)) return 0.0;
  return det;
}

// Hadamard-style scale: product of row sup-norms, an upper bound for |det|.
inline double hadamard_scale(const Matd& m) {
  double s = 1.0;
  for (int i = 0; i < m.rows; ++i) {
    double r = 0.0;
    for (int j = 0; j < m.cols; ++j) r = std::max(r, std::abs(m(i, j)));
    s *= r;
  }
  return s;
}

inline bool nondegenerate(const Matd& g, double rel_tol = 1e-12) {
  double det = determinant(g);
  return std::abs(det) > rel_tol * hadamard_scale(g);
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
inline std::vector<double> symmetric_eigenvalues(Matd m) {
  const int n = m.rows;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    if (off < 1e-30 * (1.0 + max_abs(m))) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (m(p, q) == 0.0) continue;
        double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = m(i, i);
  return ev;
}

// Three- and four-index arrays used for Christoffel symbols and Riemann
// components. First index is the contravariant one.
struct Tensor3 {
  int n = 0;
  std::vector<double> a;
  Tensor3() = default;
  explicit Tensor3(int n_) : n(n_), a(static_cast<size_t>(n_) * n_ * n_, 0.0) {}
  double& operator()(int i, int j, int k) { return a[(static_cast<size_t>(i) * n + j) * n + k]; }
  double operator()(int i, int j, int k) const { return a[(static_cast<size_t>(i) * n + j) * n + k]; }
};

struct Tensor4 {
  int n = 0;
  std::vector<double> a;
  Tensor4() = default;
  explicit Tensor4(int n_) : n(n_), a(static_cast<size_t>(n_) * n_ * n_ * n_, 0.0) {}
  double& operator()(int i, int j, int k, int l) {
    return a[((static_cast<size_t>(i) * n + j) * n + k) * n + l];
  }
  double operator()(int i, int j, int k, int l) const {
    return a[((static_cast<size_t>(i) * n + j) * n + k) * n + l];
  }
};

}  // namespace gtd
