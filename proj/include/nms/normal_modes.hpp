#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "nms/dynamics.hpp"
#include "nms/error.hpp"
#include "nms/linalg.hpp"
#include "nms/params.hpp"

namespace nms {

struct UndampedFrequencies {
  double plus = 0.0;
  double minus = 0.0;
};

/// Closed-form Hamiltonian normal-mode frequencies. Throws InstabilityError
/// when omega_-^2 < 0, i.e. g^2 > detuning * omega_m.
inline UndampedFrequencies undamped_frequencies(const SystemParams& p, double g) {
  const double d2 = p.detuning * p.detuning;
  const double m2 = p.omega_m * p.omega_m;
  const double diff = d2 - m2;
  const double root = std::sqrt(diff * diff + 4.0 * g * g * p.omega_m * p.detuning);
  const double plus2 = 0.5 * (d2 + m2 + root);
  // omega_-^2 = (d2 m2 - g^2 omega_m detuning) / omega_+^2 avoids cancellation.
  const double minus2 = plus2 > 0.0 ? (d2 * m2 - g * g * p.omega_m * p.detuning) / plus2 : 0.0;
  if (minus2 < 0.0 || plus2 < 0.0)
    throw InstabilityError("drive exceeds the static stability limit (g^2 > detuning * omega_m)");
  return {std::sqrt(plus2), std::sqrt(minus2)};
}

/// The two upper-half-plane eigenvalues of the drift with a fixed labeling.
struct ModePair {
  Complex plus;
  Complex minus;
};

struct NormalModes {
  double omega_plus = 0.0;
  double omega_minus = 0.0;
  double gamma_plus = 0.0;
  double gamma_minus = 0.0;
  bool degenerate = false;  // the pair coincides (exceptional point)

  double splitting() const { return omega_plus - omega_minus; }
};

inline NormalModes to_normal_modes(const ModePair& pair) {
  NormalModes m;
  m.omega_plus = pair.plus.imag();
  m.omega_minus = pair.minus.imag();
  m.gamma_plus = -pair.plus.real();
  m.gamma_minus = -pair.minus.real();
  const double scale = std::max(std::abs(pair.plus), std::abs(pair.minus));
  m.degenerate = std::abs(pair.plus - pair.minus) <= 1e-6 * scale;
  return m;
}

/// Magnitude labeling: larger frequency is "+", frequency ties go to the
/// more strongly damped branch.
inline ModePair label_by_magnitude(Complex a, Complex b) {
  const double tol = 1e-9 * std::max(std::abs(a), std::abs(b));
  const bool a_first = std::abs(a.imag() - b.imag()) <= tol ? a.real() <= b.real() : a.imag() > b.imag();
  return a_first ? ModePair{a, b} : ModePair{b, a};
}

inline ModePair upper_pair(const EigenSet& e) {
  return label_by_magnitude(e.eigenvalues[0], e.eigenvalues[1]);
}

inline NormalModes damped_modes(const SystemParams& p, double g, double damping_scale = 1.0) {
  return to_normal_modes(upper_pair(damped_eigenvalues(build_drift(p, g, damping_scale))));
}

/// Continuity labeling along a sweep: each point takes whichever of the two
/// assignments stays closest (in the complex plane) to the previous labels.
/// Without `previous`, the first point is labeled by magnitude.
inline std::vector<ModePair> track_modes(std::span<const std::array<Complex, 2>> sweep,
                                         std::optional<ModePair> previous = std::nullopt) {
  std::vector<ModePair> out;
  out.reserve(sweep.size());
  for (const auto& cand : sweep) {
    ModePair next;
    if (!previous) {
      next = label_by_magnitude(cand[0], cand[1]);
    } else {
      const double keep = std::abs(cand[0] - previous->plus) + std::abs(cand[1] - previous->minus);
      const double swap = std::abs(cand[1] - previous->plus) + std::abs(cand[0] - previous->minus);
      next = swap < keep ? ModePair{cand[1], cand[0]} : ModePair{cand[0], cand[1]};
    }
    out.push_back(next);
    previous = next;
  }
  return out;
}

// --- symplectic normal-mode transform ------------------------------------------

struct SymplecticTransform {
  Mat4 s_matrix;  // R_NM = S R, with R_NM = (X_+, P_+, X_-, P_-)
  double omega_plus = 0.0;
  double omega_minus = 0.0;
};

/// Williamson construction. With M = L L^T, the antisymmetric A = L^T J L
/// is brought to block form O^T A O = diag(w+ J2, w- J2) by an orthogonal O
/// built from eigenvectors of A^T A; then S = W^{-1/2} O^T L^T.
/// Within each mode plane the rotation is fixed by zeroing one momentum
/// column of the X-row, and the sign by making that row's first nonzero
/// entry positive.
inline SymplecticTransform symplectic_transform(const SystemParams& p, double g) {
  const Mat4 m = hamiltonian_matrix(p.detuning, p.omega_m, g);
  Mat4 l;
  try {
    l = cholesky(m);
  } catch (const DomainError&) {
    throw DomainError("symplectic_transform: M is not positive definite (need detuning > 0, g^2 < detuning*omega_m)");
  }
  const Mat4 j = symplectic_form();
  const Mat4 a = transpose(l) * j * l;
  const auto eig = symmetric_eigen(transpose(a) * a);  // ascending: w-^2, w-^2, w+^2, w+^2

  auto column = [](const Mat4& mat, std::size_t c) { return Vec4{mat(0, c), mat(1, c), mat(2, c), mat(3, c)}; };
  auto dot = [](const Vec4& x, const Vec4& y) { return x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + x[3] * y[3]; };
  auto scaled = [](Vec4 x, double s) {
    for (auto& v : x) v *= s;
    return x;
  };
  auto normalized = [&](Vec4 x) { return scaled(x, 1.0 / std::sqrt(dot(x, x))); };

  const double w_plus = std::sqrt(std::max(eig.values[3], 0.0));
  const double w_minus = std::sqrt(std::max(eig.values[0], 0.0));

  // First mode plane: the top eigenvector and its image under -A / w.
  const Vec4 o1 = normalized(column(eig.vectors, 3));
  const Vec4 o2 = scaled(a * o1, -1.0 / w_plus);
  // Second plane: the orthogonal complement is A-invariant.
  Vec4 o3{};
  double best = -1.0;
  for (std::size_t k = 0; k < 3; ++k) {
    Vec4 v = column(eig.vectors, k);
    const double c1 = dot(v, o1), c2 = dot(v, o2);
    for (std::size_t i = 0; i < 4; ++i) v[i] -= c1 * o1[i] + c2 * o2[i];
    const double n = dot(v, v);
    if (n > best) {
      best = n;
      o3 = v;
    }
  }
  o3 = normalized(o3);
  const Vec4 o4 = scaled(a * o3, -1.0 / w_minus);

  auto fix_plane = [&](Vec4 first, Vec4 second, double w, Mat4& s, std::size_t row) {
    // rows of S for this plane are (L o)^T / sqrt(w)
    Vec4 x = l * first, y = l * second;
    std::size_t col = 1;
    if (x[3] * x[3] + y[3] * y[3] > x[1] * x[1] + y[1] * y[1]) col = 3;
    const double theta = std::atan2(-x[col], y[col]);
    const double c = std::cos(theta), sn = std::sin(theta);
    Vec4 rx{}, ry{};
    for (std::size_t i = 0; i < 4; ++i) {
      rx[i] = c * x[i] + sn * y[i];
      ry[i] = c * y[i] - sn * x[i];
    }
    double lead = 0.0;
    for (double v : rx)
      if (std::abs(v) > 1e-12 * std::sqrt(dot(rx, rx))) {
        lead = v;
        break;
      }
    const double sign = lead < 0.0 ? -1.0 : 1.0;
    const double inv = sign / std::sqrt(w);
    for (std::size_t i = 0; i < 4; ++i) {
      s(row, i) = rx[i] * inv;
      s(row + 1, i) = ry[i] * inv;
    }
  };

  SymplecticTransform out;
  fix_plane(o1, o2, w_plus, out.s_matrix, 0);
  fix_plane(o3, o4, w_minus, out.s_matrix, 2);
  out.omega_plus = w_plus;
  out.omega_minus = w_minus;
  return out;
}

// --- splitting threshold --------------------------------------------------------

struct ThresholdEstimate {
  double g = 0.0;      // rad/s
  double power = 0.0;  // W, at the params' detuning
};

/// Smallest coupling at which the damped frequency splitting overtakes the
/// damping-rate difference, |w+ - w-| - |gamma+ - gamma-| > 0, found by
/// bisection to 1 Hz. Returns 0 when already resolved at g = 0 and nullopt
/// when not reached below the static stability limit.
inline std::optional<ThresholdEstimate> splitting_threshold(const SystemParams& p) {
  auto margin = [&](double g) {
    const auto m = damped_modes(p, g);
    return std::abs(m.omega_plus - m.omega_minus) - std::abs(m.gamma_plus - m.gamma_minus);
  };
  SystemParams unit = p;
  unit.power = 1.0;
  const double g_per_sqrt_watt = driven_coupling(unit);
  auto power_for = [&](double g) { return g_per_sqrt_watt > 0.0 ? std::pow(g / g_per_sqrt_watt, 2) : 0.0; };

  if (margin(0.0) > 0.0) return ThresholdEstimate{0.0, 0.0};
  if (p.detuning <= 0.0) return std::nullopt;
  double lo = 0.0;
  double hi = 0.999 * std::sqrt(p.detuning * p.omega_m);
  if (margin(hi) <= 0.0) return std::nullopt;
  const double resolution = hz_to_angular(1.0);
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    (margin(mid) > 0.0 ? hi : lo) = mid;
  }
  return ThresholdEstimate{hi, power_for(hi)};
}

}  // namespace nms
