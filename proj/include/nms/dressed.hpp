#pragma once

#include <cstddef>
#include <vector>

#include "nms/error.hpp"
#include "nms/normal_modes.hpp"
#include "nms/params.hpp"
#include "nms/units.hpp"

namespace nms {

inline constexpr int kMaxLadderIndex = 64;

struct DressedLevel {
  int n = 0;  // "+" mode excitations
  int m = 0;  // "-" mode excitations
  double energy = 0.0;  // J
};

struct DressedTransition {
  DressedLevel from;
  DressedLevel to;
  double sideband = 0.0;      // rad/s, either omega_+ or omega_-
  double anti_stokes = 0.0;   // emitted photon, omega_L + sideband (rad/s)
  double stokes = 0.0;        // omega_L - sideband (rad/s)
};

struct DressedLadder {
  double omega_plus = 0.0;
  double omega_minus = 0.0;
  double laser = 0.0;  // omega_L = omega_c - detuning
  std::vector<DressedLevel> levels;
  std::vector<DressedTransition> transitions;
};

inline double dressed_energy(double omega_plus, double omega_minus, int n, int m) {
  return kHbar * omega_plus * (n + 0.5) + kHbar * omega_minus * (m + 0.5);
}

/// Linearized-system eigenladder |n, m> and its single-excitation
/// transitions |n,m> -> |n-1,m> (at omega_+) and |n,m> -> |n,m-1> (at omega_-).
inline DressedLadder dressed_ladder(double omega_plus, double omega_minus, double laser, int n_max, int m_max) {
  if (n_max < 0 || m_max < 0 || n_max > kMaxLadderIndex || m_max > kMaxLadderIndex)
    throw DomainError("ladder caps must lie in [0, " + std::to_string(kMaxLadderIndex) + "]");
  DressedLadder out;
  out.omega_plus = omega_plus;
  out.omega_minus = omega_minus;
  out.laser = laser;
  for (int n = 0; n <= n_max; ++n)
    for (int m = 0; m <= m_max; ++m) out.levels.push_back({n, m, dressed_energy(omega_plus, omega_minus, n, m)});
  for (const auto& lv : out.levels) {
    if (lv.n > 0) {
      const DressedLevel to{lv.n - 1, lv.m, dressed_energy(omega_plus, omega_minus, lv.n - 1, lv.m)};
      out.transitions.push_back({lv, to, omega_plus, laser + omega_plus, laser - omega_plus});
    }
    if (lv.m > 0) {
      const DressedLevel to{lv.n, lv.m - 1, dressed_energy(omega_plus, omega_minus, lv.n, lv.m - 1)};
      out.transitions.push_back({lv, to, omega_minus, laser + omega_minus, laser - omega_minus});
    }
  }
  return out;
}

inline DressedLadder dressed_ladder(const NormalModes& modes, double laser, int n_max, int m_max) {
  return dressed_ladder(modes.omega_plus, modes.omega_minus, laser, n_max, m_max);
}

// --- single-photon (nonlinear) radiation-pressure Hamiltonian ----------------

struct NonlinearLevel {
  int k = 0;  // phonon index of the shifted Fock state
  int n = 0;  // photon number
  double energy = 0.0;        // J
  double displacement = 0.0;  // g0 n / omega_m
};

struct NonlinearSpectrum {
  double g0 = 0.0;
  double rabi_splitting = 0.0;  // g0^2 / omega_m (rad/s)
  std::vector<NonlinearLevel> levels;
};

/// E_{k,n} = hbar (omega_m k + detuning n + (g0^2/omega_m) n^2).
inline NonlinearSpectrum nonlinear_levels(double omega_m, double detuning, double g0, int k_max, int n_max) {
  if (k_max < 0 || n_max < 0 || k_max > kMaxLadderIndex || n_max > kMaxLadderIndex)
    throw DomainError("level caps must lie in [0, " + std::to_string(kMaxLadderIndex) + "]");
  NonlinearSpectrum out;
  out.g0 = g0;
  out.rabi_splitting = g0 * g0 / omega_m;
  for (int k = 0; k <= k_max; ++k)
    for (int n = 0; n <= n_max; ++n) {
      const double nn = n;
      out.levels.push_back(
          {k, n, kHbar * (omega_m * k + detuning * nn + out.rabi_splitting * nn * nn), g0 * nn / omega_m});
    }
  return out;
}

inline NonlinearSpectrum nonlinear_levels(const SystemParams& p, int k_max, int n_max) {
  return nonlinear_levels(p.omega_m, p.detuning, single_photon_coupling(p), k_max, n_max);
}

}  // namespace nms
