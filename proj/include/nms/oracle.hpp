#pragma once

// Brute-force time-domain check of the analytic emission spectrum.
//
// The Langevin equations are integrated as classical stochastic equations
// with the symmetrized noise strengths (1/2 for vacuum channels, n_bar + 1/2
// for the mechanical bath). That reproduces symmetrized spectra: the
// estimate equals the normally ordered S(omega) plus the vacuum level 1/2,
// and carries no quantum sideband asymmetry. It is meant for peak
// positions, widths and second moments.
//
// Random numbers: std::mt19937_64 feeding Boost's ziggurat normal
// distribution, one engine per trajectory. Draw order is fixed (step, substep, channel), so
// a seed reproduces a trajectory bit for bit on a given build.

#include <fftw3.h>

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "nms/dynamics.hpp"
#include "nms/fitting.hpp"
#include "nms/error.hpp"
#include "nms/linalg.hpp"
#include "nms/parallel.hpp"
#include "nms/spectrum.hpp"

namespace nms {

inline constexpr double kVacuumLevel = 0.5;
inline constexpr std::size_t kMinOracleSteps = std::size_t{1} << 14;
inline constexpr std::size_t kMinSegmentLength = 1024;

struct TrajectoryConfig {
  double dt = 5e-10;                  // s
  std::size_t n_steps = 50'000'000;   // after burn-in
  std::size_t n_segments = 8;         // Welch segments
  std::uint64_t seed = 42;
  std::size_t burn_in = 400'000;      // steps discarded before recording
  std::size_t record_every = 200;     // boxcar length of one recorded sample
  // Each step's Gaussian increment is the normalized sum of this many
  // draws, so a run at dt and one at dt/k with substeps 1 and k-fold
  // record_every share the same Brownian path.
  unsigned noise_substeps = 1;
  double noise_scale = 1.0;           // 0 turns the integrator deterministic
  Vec4 initial{};
};

struct Trajectory {
  double record_dt = 0.0;                        // s between recorded samples
  std::vector<Vec4> state;                       // R at the start of each block
  std::vector<std::array<double, 2>> cavity;     // block mean of (X_c, P_c)
  std::vector<std::array<double, 2>> input;      // block mean of (x_in, p_in), input coupler
  std::uint64_t seed = 0;
};

/// Steady-state covariance V of dR = A R dt + B dW, from A V + V A^T + Q = 0
/// with Q = 2 D N + 2 Dbar Nbar, solved as a direct 10-unknown linear system.
inline Mat4 steady_state_covariance(const DriftModel& d, const NoiseModel& n) {
  const Mat4& a = d.drift;
  const Mat4 q = 2.0 * (d.d_matrix * n.n_matrix) + 2.0 * (d.d_bar_matrix * n.n_bar_matrix);
  std::array<std::pair<std::size_t, std::size_t>, 10> idx{};
  Matrix<std::size_t, 4> slot{};
  std::size_t u = 0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i; j < 4; ++j) {
      idx[u] = {i, j};
      slot(i, j) = slot(j, i) = u++;
    }
  Matrix<double, 10> sys{};
  Vector<double, 10> rhs{};
  for (std::size_t e = 0; e < 10; ++e) {
    const auto [i, j] = idx[e];
    for (std::size_t k = 0; k < 4; ++k) {
      sys(e, slot(k, j)) += a(i, k);
      sys(e, slot(i, k)) += a(j, k);
    }
    rhs[e] = -q(i, j);
  }
  const LuDecomposition<double, 10> lu(sys);
  if (lu.singular()) throw InstabilityError("Lyapunov system is singular");
  const auto v = lu.solve(rhs);
  Mat4 cov{};
  for (std::size_t e = 0; e < 10; ++e) {
    const auto [i, j] = idx[e];
    cov(i, j) = cov(j, i) = v[e];
  }
  return cov;
}

inline double max_eigen_magnitude(const DriftModel& d) {
  double m = 0.0;
  for (const auto& z : damped_eigenvalues(d).eigenvalues) m = std::max(m, std::abs(z));
  return m;
}

inline void validate_trajectory_config(const DriftModel& d, const TrajectoryConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw GuardError("time step must be positive");
  const double guard = cfg.dt * max_eigen_magnitude(d);
  if (!(guard < 0.1))
    throw GuardError("dt * max|lambda| = " + std::to_string(guard) + " violates the stability guard (< 0.1)");
  if (cfg.n_steps < kMinOracleSteps)
    throw GuardError("need at least " + std::to_string(kMinOracleSteps) + " integration steps");
  if (cfg.record_every == 0 || cfg.noise_substeps == 0) throw GuardError("record_every and noise_substeps must be >= 1");
  if (!is_stable(damped_eigenvalues(d))) throw GuardError("drift has a non-decaying mode");
}

/// Drift of the continuous process that one Euler step reproduces exactly:
/// log(I + A dt) / dt, by its power series (|A dt| is below 0.1 under the
/// guard). Its spectrum is what the periodogram estimates.
inline Mat4 euler_effective_drift(const Mat4& a, double dt) {
  const Mat4 x = a * dt;
  Mat4 power = x;
  Mat4 sum = x;
  for (int k = 2; k <= 12; ++k) {
    power = power * x;
    sum = sum + power * ((k % 2 ? 1.0 : -1.0) / k);
  }
  return sum * (1.0 / dt);
}

/// Euler-Maruyama:
///   R <- R + A R dt - sqrt(2D) xi sqrt(dt) - sqrt(2Dbar) xibar sqrt(dt)
/// with independent Gaussian channels of variance N (input coupler and
/// mechanical bath) and Nbar (second mirror). The input-coupler samples are
/// kept (block-averaged) to form the output field.
inline Trajectory simulate_trajectory(const DriftModel& d, const NoiseModel& n, const TrajectoryConfig& cfg) {
  validate_trajectory_config(d, cfg);
  const Mat4& a = d.drift;
  const double dt = cfg.dt;
  const double sqdt = std::sqrt(dt);
  // per-channel noise amplitudes: (input x, input p, bath X, bath P, mirror x, mirror p)
  std::array<double, 6> sigma{};
  for (std::size_t c = 0; c < 4; ++c) sigma[c] = std::sqrt(n.n_matrix(c, c)) * cfg.noise_scale;
  sigma[4] = std::sqrt(n.n_bar_matrix(0, 0)) * cfg.noise_scale;
  sigma[5] = std::sqrt(n.n_bar_matrix(1, 1)) * cfg.noise_scale;
  const std::array<double, 6> couple{std::sqrt(2.0 * d.d_matrix(0, 0)),     std::sqrt(2.0 * d.d_matrix(1, 1)),
                                     std::sqrt(2.0 * d.d_matrix(2, 2)),     std::sqrt(2.0 * d.d_matrix(3, 3)),
                                     std::sqrt(2.0 * d.d_bar_matrix(0, 0)), std::sqrt(2.0 * d.d_bar_matrix(1, 1))};
  const double sub_norm = 1.0 / std::sqrt(static_cast<double>(cfg.noise_substeps));

  const Mat4 cov = steady_state_covariance(d, n);
  double scale = 0.0;
  for (std::size_t i = 0; i < 4; ++i) scale = std::max(scale, std::sqrt(std::max(cov(i, i), 0.0)));
  for (double v : cfg.initial) scale = std::max(scale, std::abs(v));
  const double blowup = 1e12 * std::max(scale, 1.0);

  std::mt19937_64 engine(cfg.seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);

  Trajectory out;
  out.seed = cfg.seed;
  out.record_dt = dt * static_cast<double>(cfg.record_every);
  const std::size_t n_records = cfg.n_steps / cfg.record_every;
  out.state.reserve(n_records);
  out.cavity.reserve(n_records);
  out.input.reserve(n_records);

  Vec4 r = cfg.initial;
  std::array<double, 6> z{};
  auto step = [&]() {
    z.fill(0.0);
    for (unsigned s = 0; s < cfg.noise_substeps; ++s)
      for (auto& zc : z) zc += normal(engine);
    for (auto& zc : z) zc *= sub_norm;
    Vec4 next;
    for (std::size_t i = 0; i < 4; ++i) {
      next[i] = r[i] + dt * (a(i, 0) * r[0] + a(i, 1) * r[1] + a(i, 2) * r[2] + a(i, 3) * r[3]) -
                couple[i] * sigma[i] * z[i] * sqdt;
    }
    next[0] -= couple[4] * sigma[4] * z[4] * sqdt;
    next[1] -= couple[5] * sigma[5] * z[5] * sqdt;
    return next;
  };

  for (std::size_t k = 0; k < cfg.burn_in; ++k) r = step();
  const double input_scale = 1.0 / sqdt;
  for (std::size_t rec = 0; rec < n_records; ++rec) {
    out.state.push_back(r);
    std::array<double, 2> cav{0.0, 0.0}, in{0.0, 0.0};
    for (std::size_t k = 0; k < cfg.record_every; ++k) {
      cav[0] += r[0];
      cav[1] += r[1];
      const Vec4 next = step();
      in[0] += sigma[0] * z[0] * input_scale;
      in[1] += sigma[1] * z[1] * input_scale;
      r = next;
    }
    const double inv = 1.0 / static_cast<double>(cfg.record_every);
    out.cavity.push_back({cav[0] * inv, cav[1] * inv});
    out.input.push_back({in[0] * inv, in[1] * inv});
    const double norm = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2] + r[3] * r[3]);
    if (!(norm < blowup))
      throw GuardError("trajectory diverged at t = " + std::to_string(static_cast<double>(rec) * out.record_dt) + " s");
  }
  return out;
}

inline Mat4 sample_covariance(const Trajectory& t) {
  Vec4 mean{};
  for (const auto& s : t.state)
    for (std::size_t i = 0; i < 4; ++i) mean[i] += s[i];
  const double count = static_cast<double>(t.state.size());
  for (auto& v : mean) v /= count;
  Mat4 cov{};
  for (const auto& s : t.state)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) cov(i, j) += (s[i] - mean[i]) * (s[j] - mean[j]);
  return cov * (1.0 / (count - 1.0));
}

namespace detail {
// FFTW planning is not thread safe; execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlan {
  fftw_complex* buffer = nullptr;
  fftw_plan plan = nullptr;
  explicit FftwPlan(std::size_t n) {
    std::lock_guard lock(fftw_planner_mutex());
    buffer = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    plan = fftw_plan_dft_1d(static_cast<int>(n), buffer, buffer, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  ~FftwPlan() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
    fftw_free(buffer);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
};
}  // namespace detail

/// Output field x_out = sqrt(2 kappa) X_c + x_in (same for p), formed from
/// the block-averaged record, a_out = (x_out + i p_out)/sqrt(2). Welch
/// average over `n_segments` non-overlapping Hann-windowed segments,
/// normalized so a vacuum input reads 1/2. Bins up to `max_omega`.
inline SpectrumGrid output_periodogram(const Trajectory& t, const DriftModel& d, const TrajectoryConfig& cfg,
                                       double max_omega = std::numeric_limits<double>::infinity()) {
  if (cfg.n_segments == 0) throw DomainError("need at least one periodogram segment");
  const std::size_t len = t.cavity.size() / cfg.n_segments;
  if (len < kMinSegmentLength)
    throw DomainError("periodogram segment of " + std::to_string(len) + " samples is shorter than " +
                      std::to_string(kMinSegmentLength));
  const double tau = t.record_dt;
  const double root_kappa = std::sqrt(2.0 * d.d_matrix(0, 0));

  std::vector<double> window(len);
  double wsq = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    window[k] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(k) / static_cast<double>(len));
    wsq += window[k] * window[k];
  }
  const double norm = tau / wsq / static_cast<double>(cfg.n_segments);

  std::vector<double> power(len, 0.0);
  detail::FftwPlan fft(len);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (std::size_t seg = 0; seg < cfg.n_segments; ++seg) {
    const std::size_t base = seg * len;
    for (std::size_t k = 0; k < len; ++k) {
      const auto& c = t.cavity[base + k];
      const auto& in = t.input[base + k];
      fft.buffer[k][0] = window[k] * inv_sqrt2 * (root_kappa * c[0] + in[0]);
      fft.buffer[k][1] = window[k] * inv_sqrt2 * (root_kappa * c[1] + in[1]);
    }
    fftw_execute(fft.plan);
    for (std::size_t k = 0; k < len; ++k)
      power[k] += norm * (fft.buffer[k][0] * fft.buffer[k][0] + fft.buffer[k][1] * fft.buffer[k][1]);
  }

  // FFTW's forward sign is e^{-i omega t}; S(+omega) uses e^{+i omega t}, so
  // bin k of +omega is FFTW bin len - k.
  SpectrumGrid out;
  const double domega = kTwoPi / (static_cast<double>(len) * tau);
  for (std::size_t k = 1; k < len / 2; ++k) {
    const double w = domega * static_cast<double>(k);
    if (w > max_omega) break;
    out.omega.push_back(w);
    out.s_pos.push_back(power[len - k]);
    out.s_neg.push_back(power[k]);
    out.s_nps.push_back(std::hypot(power[len - k], power[k]));
  }
  return out;
}

struct OracleRun {
  SpectrumGrid periodogram;  // averaged over trajectories
  Mat4 covariance{};         // mean of the per-trajectory sample covariances
  std::size_t trajectories = 0;
};

/// Independent trajectories, trajectory i with seed cfg.seed + i. They run
/// in parallel; results are combined in index order so the output does not
/// depend on the thread count.
inline OracleRun run_oracle(const DriftModel& d, const NoiseModel& n, const TrajectoryConfig& cfg,
                            std::size_t trajectories, double max_omega = std::numeric_limits<double>::infinity(),
                            unsigned threads = thread_count()) {
  if (trajectories == 0) throw DomainError("need at least one trajectory");
  validate_trajectory_config(d, cfg);
  std::vector<SpectrumGrid> parts(trajectories);
  std::vector<Mat4> covs(trajectories);
  parallel_for(
      trajectories,
      [&](std::size_t i) {
        TrajectoryConfig c = cfg;
        c.seed = cfg.seed + i;
        const Trajectory t = simulate_trajectory(d, n, c);
        parts[i] = output_periodogram(t, d, c, max_omega);
        covs[i] = sample_covariance(t);
      },
      threads);
  OracleRun run;
  run.trajectories = trajectories;
  run.periodogram = parts[0];
  SpectrumGrid& out = run.periodogram;
  run.covariance = covs[0];
  for (std::size_t i = 1; i < trajectories; ++i) {
    run.covariance = run.covariance + covs[i];
    for (std::size_t k = 0; k < out.size(); ++k) {
      out.s_pos[k] += parts[i].s_pos[k];
      out.s_neg[k] += parts[i].s_neg[k];
    }
  }
  const double inv = 1.0 / static_cast<double>(trajectories);
  run.covariance = run.covariance * inv;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.s_pos[k] *= inv;
    out.s_neg[k] *= inv;
    out.s_nps[k] = std::hypot(out.s_pos[k], out.s_neg[k]);
  }
  return run;
}

inline SpectrumGrid averaged_periodogram(const DriftModel& d, const NoiseModel& n, const TrajectoryConfig& cfg,
                                         std::size_t trajectories, double max_omega = std::numeric_limits<double>::infinity(),
                                         unsigned threads = thread_count()) {
  return run_oracle(d, n, cfg, trajectories, max_omega, threads).periodogram;
}

// --- peak comparison -----------------------------------------------------------------

struct PeakComparison {
  std::vector<double> omega;            // periodogram bins inside the window
  std::vector<double> oracle_nps;       // vacuum level removed
  std::vector<double> analytic_nps;     // same bins
  FitResult oracle_fit;
  FitResult analytic_fit;
  std::vector<double> deltas;           // oracle - analytic centers, rad/s

  bool converged() const { return oracle_fit.converged && analytic_fit.converged; }
  double max_abs_delta() const {
    double m = 0.0;
    for (double v : deltas) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Peak positions of the periodogram against the analytic S_NPS on the same
/// bins. Both are located the same way, by a Lorentzian fit weighted with
/// the analytic spectrum (periodogram noise is proportional to the
/// spectrum), the oracle fit starting from the analytic one. The
/// symmetrized oracle carries the vacuum level in each sideband, which is
/// subtracted first.
inline PeakComparison compare_peaks(const SpectrumGrid& periodogram, const DriftModel& d, const NoiseModel& n,
                                    double window_lo, double window_hi, int n_peaks) {
  PeakComparison c;
  for (std::size_t k = 0; k < periodogram.size(); ++k) {
    const double w = periodogram.omega[k];
    if (w < window_lo || w > window_hi) continue;
    c.omega.push_back(w);
    c.oracle_nps.push_back(std::hypot(periodogram.s_pos[k] - kVacuumLevel, periodogram.s_neg[k] - kVacuumLevel));
    c.analytic_nps.push_back(
        std::hypot(spectral_density(gamma_matrix(d, n, w)), spectral_density(gamma_matrix(d, n, -w))));
  }
  if (c.omega.empty()) throw DomainError("peak comparison window contains no periodogram bins");
  c.analytic_fit = fit_lorentzian(c.omega, c.analytic_nps, n_peaks, std::nullopt, {}, c.analytic_nps);
  c.oracle_fit = fit_lorentzian(c.omega, c.oracle_nps, n_peaks, c.analytic_fit, {}, c.analytic_nps);
  for (std::size_t i = 0; i < c.oracle_fit.centers.size(); ++i)
    c.deltas.push_back(c.oracle_fit.centers[i] - c.analytic_fit.centers[i]);
  return c;
}

}  // namespace nms
