#pragma once

// Small fixed-size dense matrices. Everything in this project is 4x4 (or the
// 10x10 Lyapunov system), so sizes are template parameters and storage is a
// std::array.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <type_traits>
#include <utility>

#include "nms/error.hpp"

namespace nms {

using Complex = std::complex<double>;

namespace detail {
template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};

template <typename T>
T conj_if_complex(const T& v) {
  if constexpr (is_complex<T>::value) return std::conj(v);
  else return v;
}
}  // namespace detail

template <typename T, std::size_t N>
using Vector = std::array<T, N>;

template <typename T, std::size_t R, std::size_t C = R>
struct Matrix {
  std::array<T, R * C> data{};

  static constexpr std::size_t rows = R;
  static constexpr std::size_t cols = C;

  constexpr T& operator()(std::size_t i, std::size_t j) { return data[i * C + j]; }
  constexpr const T& operator()(std::size_t i, std::size_t j) const { return data[i * C + j]; }

  static constexpr Matrix zero() { return Matrix{}; }

  static constexpr Matrix identity() {
    static_assert(R == C);
    Matrix m{};
    for (std::size_t i = 0; i < R; ++i) m(i, i) = T(1);
    return m;
  }

  static constexpr Matrix diagonal(const Vector<T, R>& d) {
    static_assert(R == C);
    Matrix m{};
    for (std::size_t i = 0; i < R; ++i) m(i, i) = d[i];
    return m;
  }

  Matrix& operator+=(const Matrix& o) {
    for (std::size_t k = 0; k < R * C; ++k) data[k] += o.data[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    for (std::size_t k = 0; k < R * C; ++k) data[k] -= o.data[k];
    return *this;
  }
  Matrix& operator*=(const T& s) {
    for (auto& v : data) v *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator-(Matrix a) {
    for (auto& v : a.data) v = -v;
    return a;
  }
  friend Matrix operator*(Matrix a, const T& s) { return a *= s; }
  friend Matrix operator*(const T& s, Matrix a) { return a *= s; }
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

using Mat4 = Matrix<double, 4>;
using CMat4 = Matrix<Complex, 4>;
using Vec4 = Vector<double, 4>;

template <typename T, std::size_t R, std::size_t K, std::size_t C>
Matrix<T, R, C> operator*(const Matrix<T, R, K>& a, const Matrix<T, K, C>& b) {
  Matrix<T, R, C> out{};
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t k = 0; k < K; ++k) {
      const T aik = a(i, k);
      for (std::size_t j = 0; j < C; ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

template <typename T, std::size_t R, std::size_t C>
Vector<T, R> operator*(const Matrix<T, R, C>& a, const Vector<T, C>& x) {
  Vector<T, R> out{};
  for (std::size_t i = 0; i < R; ++i) {
    T acc{};
    for (std::size_t j = 0; j < C; ++j) acc += a(i, j) * x[j];
    out[i] = acc;
  }
  return out;
}

template <typename T, std::size_t R, std::size_t C>
Matrix<T, C, R> transpose(const Matrix<T, R, C>& a) {
  Matrix<T, C, R> out{};
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < C; ++j) out(j, i) = a(i, j);
  return out;
}

template <typename T, std::size_t R, std::size_t C>
Matrix<T, C, R> adjoint(const Matrix<T, R, C>& a) {
  Matrix<T, C, R> out{};
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < C; ++j) out(j, i) = detail::conj_if_complex(a(i, j));
  return out;
}

template <std::size_t R, std::size_t C>
Matrix<Complex, R, C> to_complex(const Matrix<double, R, C>& a) {
  Matrix<Complex, R, C> out{};
  for (std::size_t k = 0; k < R * C; ++k) out.data[k] = a.data[k];
  return out;
}

/// Induced infinity norm (maximum absolute row sum).
template <typename T, std::size_t R, std::size_t C>
double norm_inf(const Matrix<T, R, C>& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < R; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < C; ++j) row += std::abs(a(i, j));
    best = std::max(best, row);
  }
  return best;
}

template <typename T, std::size_t N>
T trace(const Matrix<T, N, N>& a) {
  T t{};
  for (std::size_t i = 0; i < N; ++i) t += a(i, i);
  return t;
}

/// LU factorization with partial pivoting, kept for repeated solves.
template <typename T, std::size_t N>
class LuDecomposition {
public:
  explicit LuDecomposition(const Matrix<T, N, N>& a) : lu_(a) {
    double scale = 0.0;
    for (const auto& v : a.data) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < N; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < N; ++k) {
      std::size_t p = k;
      double best = std::abs(lu_(k, k));
      for (std::size_t i = k + 1; i < N; ++i)
        if (std::abs(lu_(i, k)) > best) {
          best = std::abs(lu_(i, k));
          p = i;
        }
      if (!(best > 1e-16 * scale) || best == 0.0) {
        singular_ = true;
        return;
      }
      if (p != k) {
        for (std::size_t j = 0; j < N; ++j) std::swap(lu_(k, j), lu_(p, j));
        std::swap(perm_[k], perm_[p]);
        sign_ = -sign_;
      }
      for (std::size_t i = k + 1; i < N; ++i) {
        lu_(i, k) /= lu_(k, k);
        const T f = lu_(i, k);
        for (std::size_t j = k + 1; j < N; ++j) lu_(i, j) -= f * lu_(k, j);
      }
    }
  }

  bool singular() const noexcept { return singular_; }

  T determinant() const {
    if (singular_) return T(0);
    T d = T(sign_);
    for (std::size_t i = 0; i < N; ++i) d *= lu_(i, i);
    return d;
  }

  Vector<T, N> solve(const Vector<T, N>& b) const {
    if (singular_) throw SingularMatrixError("linear solve: matrix is singular");
    Vector<T, N> x{};
    for (std::size_t i = 0; i < N; ++i) {
      T acc = b[perm_[i]];
      for (std::size_t j = 0; j < i; ++j) acc -= lu_(i, j) * x[j];
      x[i] = acc;
    }
    for (std::size_t ii = N; ii-- > 0;) {
      T acc = x[ii];
      for (std::size_t j = ii + 1; j < N; ++j) acc -= lu_(ii, j) * x[j];
      x[ii] = acc / lu_(ii, ii);
    }
    return x;
  }

  template <std::size_t C>
  Matrix<T, N, C> solve(const Matrix<T, N, C>& b) const {
    Matrix<T, N, C> out{};
    for (std::size_t c = 0; c < C; ++c) {
      Vector<T, N> col{};
      for (std::size_t i = 0; i < N; ++i) col[i] = b(i, c);
      const auto x = solve(col);
      for (std::size_t i = 0; i < N; ++i) out(i, c) = x[i];
    }
    return out;
  }

private:
  Matrix<T, N, N> lu_;
  std::array<std::size_t, N> perm_{};
  int sign_ = 1;
  bool singular_ = false;
};

template <typename T, std::size_t N>
T determinant(const Matrix<T, N, N>& a) {
  return LuDecomposition<T, N>(a).determinant();
}

/// Lower-triangular L with L L^T = a. Throws DomainError unless a is
/// symmetric positive definite.
template <std::size_t N>
Matrix<double, N, N> cholesky(const Matrix<double, N, N>& a) {
  Matrix<double, N, N> l{};
  for (std::size_t j = 0; j < N; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw DomainError("cholesky: matrix is not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < N; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

template <std::size_t N>
struct SymmetricEigen {
  Vector<double, N> values;       // ascending
  Matrix<double, N, N> vectors;   // column k belongs to values[k]
};

/// Cyclic Jacobi rotations for a real symmetric matrix.
template <std::size_t N>
SymmetricEigen<N> symmetric_eigen(Matrix<double, N, N> a) {
  auto v = Matrix<double, N, N>::identity();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      diag += a(i, i) * a(i, i);
      for (std::size_t j = i + 1; j < N; ++j) off += a(i, j) * a(i, j);
    }
    if (off <= 1e-32 * diag || off == 0.0) break;
    for (std::size_t p = 0; p < N; ++p)
      for (std::size_t q = p + 1; q < N; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < N; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < N; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < N; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::array<std::size_t, N> order{};
  for (std::size_t i = 0; i < N; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymmetricEigen<N> out{};
  for (std::size_t k = 0; k < N; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < N; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

}  // namespace nms
