#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "nms/eigenvalues.hpp"
#include "nms/linalg.hpp"
#include "nms/params.hpp"

namespace nms {

/// Linearized dynamics in the quadrature basis R = (X_c, P_c, X_m, P_m):
///   dR/dt = (J M - D - Dbar) R + noise.
struct DriftModel {
  Mat4 m_matrix;      // Hamiltonian quadratic form, H = (hbar/2) R^T M R
  Mat4 j_matrix;      // symplectic form
  Mat4 d_matrix;      // diag(kappa, kappa, gamma_m0, gamma_m0)
  Mat4 d_bar_matrix;  // diag(kappa_bar, kappa_bar, 0, 0)
  Mat4 drift;
};

inline Mat4 symplectic_form() {
  Mat4 j{};
  j(0, 1) = 1.0;
  j(1, 0) = -1.0;
  j(2, 3) = 1.0;
  j(3, 2) = -1.0;
  return j;
}

inline Mat4 hamiltonian_matrix(double detuning, double omega_m, double g) {
  Mat4 m = Mat4::diagonal({detuning, detuning, omega_m, omega_m});
  m(0, 2) = -g;
  m(2, 0) = -g;
  return m;
}

/// `damping_scale` multiplies every decay rate; 0 gives the Hamiltonian
/// (undamped) flow.
inline DriftModel build_drift(const SystemParams& p, double g, double damping_scale = 1.0) {
  DriftModel d;
  d.m_matrix = hamiltonian_matrix(p.detuning, p.omega_m, g);
  d.j_matrix = symplectic_form();
  d.d_matrix = Mat4::diagonal({p.kappa, p.kappa, p.gamma_m0, p.gamma_m0}) * damping_scale;
  d.d_bar_matrix = Mat4::diagonal({p.kappa_bar, p.kappa_bar, 0.0, 0.0}) * damping_scale;
  d.drift = d.j_matrix * d.m_matrix - d.d_matrix - d.d_bar_matrix;
  return d;
}

/// Eigenvalues lambda of the drift: Im lambda is a mode frequency,
/// -Re lambda its damping rate.
struct EigenSet {
  std::array<Complex, 4> eigenvalues;
};

namespace detail {
// Imag descending; imaginary parts equal to 1e-9 of the spectral scale count
// as ties and are ordered by real part ascending.
inline void order_eigenvalues(std::array<Complex, 4>& ev) {
  double scale = 0.0;
  for (const auto& z : ev) scale = std::max(scale, std::abs(z));
  const double tol = 1e-9 * scale;
  std::sort(ev.begin(), ev.end(), [](const Complex& a, const Complex& b) { return a.imag() > b.imag(); });
  for (std::size_t i = 0; i + 1 < ev.size(); ++i)
    for (std::size_t j = 0; j + 1 < ev.size() - i; ++j)
      if (std::abs(ev[j].imag() - ev[j + 1].imag()) <= tol && ev[j + 1].real() < ev[j].real())
        std::swap(ev[j], ev[j + 1]);
}
}  // namespace detail

inline EigenSet damped_eigenvalues(const DriftModel& d) {
  EigenSet out{eigenvalues(d.drift)};
  detail::order_eigenvalues(out.eigenvalues);
  return out;
}

inline bool is_stable(const EigenSet& e) {
  return std::all_of(e.eigenvalues.begin(), e.eigenvalues.end(), [](const Complex& z) { return z.real() < 0.0; });
}

}  // namespace nms
