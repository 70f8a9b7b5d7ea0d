#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nms/dynamics.hpp"
#include "nms/error.hpp"
#include "nms/linalg.hpp"
#include "nms/parallel.hpp"
#include "nms/params.hpp"

namespace nms {

/// Symmetrized input-noise strengths per quadrature channel.
struct NoiseModel {
  Mat4 n_matrix;      // diag(1/2, 1/2, n_bar + 1/2, n_bar + 1/2)
  Mat4 n_bar_matrix;  // diag(1/2, 1/2, 0, 0), second-mirror vacuum

  static NoiseModel thermal(double n_bar) {
    return {Mat4::diagonal({0.5, 0.5, n_bar + 0.5, n_bar + 0.5}), Mat4::diagonal({0.5, 0.5, 0.0, 0.0})};
  }
};

/// Uniform sideband-frequency grid (rad/s), strictly positive.
struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  std::size_t points = 0;

  static GridSpec around_mechanics(const SystemParams& p, std::size_t points = 4096) {
    return {0.5 * p.omega_m, 1.5 * p.omega_m, points};
  }

  void validate() const {
    if (!(start > 0.0) || !(stop > start) || points < 2)
      throw DomainError("grid needs 0 < start < stop and at least 2 points");
  }
  double step() const { return (stop - start) / static_cast<double>(points - 1); }
  double at(std::size_t i) const { return start + step() * static_cast<double>(i); }
};

struct SpectrumGrid {
  std::vector<double> omega;  // rad/s, uniform and increasing
  std::vector<double> s_pos;  // S(+omega)
  std::vector<double> s_neg;  // S(-omega)
  std::vector<double> s_nps;  // sqrt(S(omega)^2 + S(-omega)^2)

  std::size_t size() const { return omega.size(); }
  double step() const { return omega.size() > 1 ? omega[1] - omega[0] : 0.0; }
};

/// Output-field spectral correlation matrix Gamma(omega), both mirrors.
///
/// Besides the symmetrized strengths in `n`, the inputs carry their
/// canonical commutator, <x_in p_in> = i/2, i.e. N + (i/2) J. That makes
/// Gamma the non-symmetrized correlation, so spectral_density comes out
/// normally ordered: vacuum inputs give exactly zero emission.
inline CMat4 gamma_matrix(const DriftModel& d, const NoiseModel& n, double omega) {
  const Complex i{0.0, 1.0};
  CMat4 k = to_complex(d.drift);
  for (std::size_t r = 0; r < 4; ++r) k(r, r) += i * omega;
  const LuDecomposition<Complex, 4> lu(k);
  if (lu.singular())
    throw InstabilityError("resolvent is singular at omega = " + std::to_string(omega) + " rad/s");

  Mat4 sqrt_d{}, sqrt_d_bar{};
  for (std::size_t r = 0; r < 4; ++r) {
    sqrt_d(r, r) = std::sqrt(2.0 * d.d_matrix(r, r));
    sqrt_d_bar(r, r) = std::sqrt(2.0 * d.d_bar_matrix(r, r));
  }
  const CMat4 sd = to_complex(sqrt_d);
  const CMat4 through = sd * lu.solve(sd) + CMat4::identity();
  const CMat4 leak = sd * lu.solve(to_complex(sqrt_d_bar));

  Mat4 j_cavity{};
  j_cavity(0, 1) = 1.0;
  j_cavity(1, 0) = -1.0;
  const CMat4 n_full = to_complex(n.n_matrix) + i * 0.5 * to_complex(d.j_matrix);
  const CMat4 n_bar_full = to_complex(n.n_bar_matrix) + i * 0.5 * to_complex(j_cavity);

  return through * n_full * adjoint(through) + leak * n_bar_full * adjoint(leak);
}

/// S = (1/2)[G11 + G22 + i(G12 - G21)] before dropping the imaginary part.
inline Complex spectral_density_complex(const CMat4& gamma) {
  const Complex i{0.0, 1.0};
  return 0.5 * (gamma(0, 0) + gamma(1, 1) + i * (gamma(0, 1) - gamma(1, 0)));
}

/// Real part of spectral_density_complex; for Hermitian Gamma the discarded
/// imaginary residue is rounding noise.
inline double spectral_density(const CMat4& gamma) { return spectral_density_complex(gamma).real(); }

inline SpectrumGrid noise_power_spectrum(const DriftModel& d, const NoiseModel& n, const GridSpec& grid,
                                         unsigned threads = thread_count()) {
  grid.validate();
  if (!is_stable(damped_eigenvalues(d)))
    throw InstabilityError("drift has a non-decaying mode; no stationary spectrum");
  SpectrumGrid out;
  out.omega.resize(grid.points);
  out.s_pos.resize(grid.points);
  out.s_neg.resize(grid.points);
  out.s_nps.resize(grid.points);
  parallel_for(
      grid.points,
      [&](std::size_t k) {
        const double w = grid.at(k);
        const double sp = spectral_density(gamma_matrix(d, n, w));
        const double sn = spectral_density(gamma_matrix(d, n, -w));
        out.omega[k] = w;
        out.s_pos[k] = sp;
        out.s_neg[k] = sn;
        out.s_nps[k] = std::hypot(sp, sn);
      },
      threads);
  return out;
}

inline SpectrumGrid noise_power_spectrum(const SystemParams& p, double g, const GridSpec& grid,
                                         unsigned threads = thread_count()) {
  return noise_power_spectrum(build_drift(p, g), NoiseModel::thermal(thermal_occupation(p)), grid, threads);
}

}  // namespace nms
