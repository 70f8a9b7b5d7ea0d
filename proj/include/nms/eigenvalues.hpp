#pragma once

// Eigenvalues of a small real nonsymmetric matrix: balance, Householder
// reduction to upper Hessenberg form, then single-shift complex QR with
// deflation. Robust near double roots, which is where closed-form quartic
// roots lose accuracy.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>

#include "nms/error.hpp"
#include "nms/linalg.hpp"

namespace nms {

inline constexpr int kQrIterationCap = 200;

namespace detail {

/// Parlett-Reinsch balancing with powers of two (exact in floating point).
template <std::size_t N>
void balance(Matrix<double, N, N>& a) {
  constexpr double radix = 2.0;
  bool done = false;
  while (!done) {
    done = true;
    for (std::size_t i = 0; i < N; ++i) {
      double r = 0.0, c = 0.0;
      for (std::size_t j = 0; j < N; ++j)
        if (j != i) {
          c += std::abs(a(j, i));
          r += std::abs(a(i, j));
        }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix, f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= radix * radix;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= radix * radix;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        for (std::size_t j = 0; j < N; ++j) a(i, j) /= f;
        for (std::size_t j = 0; j < N; ++j) a(j, i) *= f;
      }
    }
  }
}

template <std::size_t N>
void reduce_to_hessenberg(Matrix<double, N, N>& a) {
  for (std::size_t k = 0; k + 2 < N; ++k) {
    double alpha = 0.0;
    for (std::size_t i = k + 1; i < N; ++i) alpha += a(i, k) * a(i, k);
    alpha = std::sqrt(alpha);
    if (alpha == 0.0) continue;
    if (a(k + 1, k) > 0) alpha = -alpha;
    std::array<double, N> v{};
    v[k + 1] = a(k + 1, k) - alpha;
    for (std::size_t i = k + 2; i < N; ++i) v[i] = a(i, k);
    double vnorm2 = 0.0;
    for (std::size_t i = k + 1; i < N; ++i) vnorm2 += v[i] * v[i];
    if (vnorm2 == 0.0) continue;
    // a <- P a P with P = I - 2 v v^T / (v^T v)
    for (std::size_t j = 0; j < N; ++j) {
      double s = 0.0;
      for (std::size_t i = k + 1; i < N; ++i) s += v[i] * a(i, j);
      s *= 2.0 / vnorm2;
      for (std::size_t i = k + 1; i < N; ++i) a(i, j) -= s * v[i];
    }
    for (std::size_t i = 0; i < N; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < N; ++j) s += a(i, j) * v[j];
      s *= 2.0 / vnorm2;
      for (std::size_t j = k + 1; j < N; ++j) a(i, j) -= s * v[j];
    }
    for (std::size_t i = k + 2; i < N; ++i) a(i, k) = 0.0;
  }
}

}  // namespace detail

/// All eigenvalues of `input`, in the order they deflate (unsorted).
/// Throws ConvergenceError naming the eigenvalue index that failed to
/// converge within kQrIterationCap shifted QR steps.
template <std::size_t N>
std::array<Complex, N> eigenvalues(Matrix<double, N, N> input) {
  detail::balance(input);
  detail::reduce_to_hessenberg(input);
  auto h = to_complex(input);

  std::array<Complex, N> out{};
  constexpr double eps = 2.220446049250313e-16;
  std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(N) - 1;
  int iter = 0;
  while (hi >= 0) {
    if (hi == 0) {
      out[0] = h(0, 0);
      break;
    }
    std::ptrdiff_t lo = hi;
    while (lo > 0) {
      const double sub = std::abs(h(lo, lo - 1));
      const double ref = std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo));
      if (sub <= eps * ref || sub == 0.0) {
        h(lo, lo - 1) = 0.0;
        break;
      }
      --lo;
    }
    if (lo == hi) {
      out[hi] = h(hi, hi);
      --hi;
      iter = 0;
      continue;
    }
    if (++iter > kQrIterationCap)
      throw ConvergenceError("QR iteration did not converge for eigenvalue " + std::to_string(hi));

    Complex mu;
    if (iter % 11 == 0) {
      // exceptional shift to break cycles
      mu = h(hi, hi) + Complex(std::abs(h(hi, hi - 1)) * 0.75, 0.0);
    } else {
      const Complex a = h(hi - 1, hi - 1), b = h(hi - 1, hi), c = h(hi, hi - 1), d = h(hi, hi);
      const Complex half = 0.5 * (a - d);
      const Complex disc = std::sqrt(half * half + b * c);
      const Complex mu1 = 0.5 * (a + d) + disc;
      const Complex mu2 = 0.5 * (a + d) - disc;
      mu = std::abs(mu1 - d) < std::abs(mu2 - d) ? mu1 : mu2;
    }

    const auto l = static_cast<std::size_t>(lo);
    const auto u = static_cast<std::size_t>(hi);
    for (std::size_t k = l; k <= u; ++k) h(k, k) -= mu;
    std::array<Complex, N> cs{}, sn{};
    for (std::size_t k = l; k < u; ++k) {
      const Complex x = h(k, k), y = h(k + 1, k);
      const double r = std::hypot(std::abs(x), std::abs(y));
      Complex c = 1.0, s = 0.0;
      if (r != 0.0) {
        c = x / r;
        s = y / r;
      }
      cs[k] = c;
      sn[k] = s;
      for (std::size_t j = k; j <= u; ++j) {
        const Complex top = h(k, j), bot = h(k + 1, j);
        h(k, j) = std::conj(c) * top + std::conj(s) * bot;
        h(k + 1, j) = -s * top + c * bot;
      }
    }
    for (std::size_t k = l; k < u; ++k) {
      const Complex c = cs[k], s = sn[k];
      const std::size_t last = std::min(k + 2, u);
      for (std::size_t i = l; i <= last; ++i) {
        const Complex left = h(i, k), right = h(i, k + 1);
        h(i, k) = left * c + right * s;
        h(i, k + 1) = -left * std::conj(s) + right * std::conj(c);
      }
    }
    for (std::size_t k = l; k <= u; ++k) h(k, k) += mu;
  }
  return out;
}

}  // namespace nms
