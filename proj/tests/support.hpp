#pragma once

// Shared fixtures: the reference device at the operating points used by
// several suites, and a reproducible generator of random stable systems.

#include <cmath>
#include <random>

#include "nms/nms.hpp"

namespace nms::testing {

inline SystemParams at_power(SystemParams p, double watts, double detuning_over_omega_m = 1.0) {
  p.power = watts;
  p.detuning = detuning_over_omega_m * p.omega_m;
  return p;
}

struct RandomSystem {
  SystemParams params;
  double g = 0.0;
};

/// Draws until the drift is stable and M is positive definite, so every
/// returned case is a valid input for every module.
inline RandomSystem random_stable_system(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) { return lo * std::pow(hi / lo, u(rng)); };
  for (;;) {
    RandomSystem s;
    SystemParams& p = s.params;
    p = SystemParams::reference_device();
    p.omega_m = hz_to_angular(log_uniform(1e5, 1e7));
    p.detuning = p.omega_m * (0.3 + 1.4 * u(rng));
    p.kappa = p.omega_m * log_uniform(1e-3, 0.5);
    p.kappa_bar = p.kappa * u(rng);
    p.gamma_m0 = p.omega_m * log_uniform(1e-7, 1e-2);
    s.g = 0.95 * std::sqrt(p.detuning * p.omega_m) * u(rng);
    if (is_stable(damped_eigenvalues(build_drift(p, s.g)))) return s;
  }
}

inline double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace nms::testing
