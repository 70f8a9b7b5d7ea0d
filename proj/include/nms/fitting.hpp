#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nms/error.hpp"
#include "nms/levenberg_marquardt.hpp"
#include "nms/spectrum.hpp"
#include "nms/units.hpp"

namespace nms {

// --- peak extraction --------------------------------------------------------------

struct Peak {
  double center = 0.0;
  double height = 0.0;
};

/// Strict local maxima (plateaus report their first sample), refined by a
/// three-point parabola. Sorted by height descending, ties by lower center.
inline std::vector<Peak> extract_peaks(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("extract_peaks: axis and values differ in length");
  std::vector<Peak> peaks;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
    const double a = y[i - 1], b = y[i], c = y[i + 1];
    const double curvature = a - 2.0 * b + c;
    double offset = 0.0;
    if (curvature < 0.0) offset = std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5);
    const double h = offset >= 0.0 ? x[i + 1] - x[i] : x[i] - x[i - 1];
    peaks.push_back({x[i] + offset * h, b - 0.25 * (a - c) * offset});
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& p, const Peak& q) {
    return p.height != q.height ? p.height > q.height : p.center < q.center;
  });
  return peaks;
}

inline std::vector<Peak> extract_peaks(const SpectrumGrid& g) { return extract_peaks(g.omega, g.s_nps); }

// --- Lorentzian peaks ---------------------------------------------------------------

/// f(x) = offset + sum_i A_i w_i^2 / ((x - c_i)^2 + w_i^2); w is the half
/// width at half maximum. Peaks are reported in ascending center order.
struct FitResult {
  std::vector<double> centers;
  std::vector<double> widths;
  std::vector<double> amplitudes;
  double offset = 0.0;
  double residual_norm = 0.0;  // RMS, data units
  bool converged = false;
  int iterations = 0;

  double fwhm(std::size_t i) const { return 2.0 * widths.at(i); }
  double evaluate(double x) const {
    double f = offset;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const double d = x - centers[i];
      f += amplitudes[i] * widths[i] * widths[i] / (d * d + widths[i] * widths[i]);
    }
    return f;
  }
};

namespace detail {

struct Normalization {
  double x0 = 0.0, xs = 1.0, ys = 1.0;
};

inline Normalization normalize_window(std::span<const double> x, std::span<const double> y) {
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  if (*ymin == *ymax) throw DomainError("fit window is degenerate: all values are equal");
  Normalization n;
  n.x0 = 0.5 * (x.front() + x.back());
  n.xs = 0.5 * (x.back() - x.front());
  n.ys = std::max(std::abs(*ymin), std::abs(*ymax));
  return n;
}

/// Half width at half maximum above `base`, walking outward from index i.
inline double half_width_at(std::span<const double> x, std::span<const double> y, std::size_t i, double base) {
  const double half = base + 0.5 * (y[i] - base);
  std::size_t lo = i, hi = i;
  while (lo > 0 && y[lo] > half) --lo;
  while (hi + 1 < y.size() && y[hi] > half) ++hi;
  const double w = 0.5 * (x[hi] - x[lo]);
  return w > 0.0 ? w : (x[1] - x[0]);
}

}  // namespace detail

/// Guess from the tallest local maxima; an unresolved doublet is seeded as
/// the single peak split by its half width.
inline FitResult lorentzian_initial_guess(std::span<const double> x, std::span<const double> y, int n_peaks) {
  const double base = *std::min_element(y.begin(), y.end());
  auto peaks = extract_peaks(x, y);
  if (peaks.empty()) {
    const auto it = std::max_element(y.begin(), y.end());
    peaks.push_back({x[static_cast<std::size_t>(it - y.begin())], *it});
  }
  auto index_of = [&](double c) {
    const auto it = std::lower_bound(x.begin(), x.end(), c);
    std::size_t i = static_cast<std::size_t>(it - x.begin());
    if (i >= x.size()) i = x.size() - 1;
    if (i > 0 && std::abs(x[i - 1] - c) < std::abs(x[i] - c)) --i;
    return i;
  };
  FitResult g;
  g.offset = base;
  const std::size_t use = std::min<std::size_t>(peaks.size(), static_cast<std::size_t>(n_peaks));
  for (std::size_t k = 0; k < use; ++k) {
    g.centers.push_back(peaks[k].center);
    g.widths.push_back(detail::half_width_at(x, y, index_of(peaks[k].center), base));
    g.amplitudes.push_back(std::max(peaks[k].height - base, 1e-12 * std::abs(peaks[k].height)));
  }
  if (static_cast<int>(use) < n_peaks) {
    const double c = g.centers[0], w = g.widths[0], a = g.amplitudes[0];
    g.centers = {c - 0.5 * w, c + 0.5 * w};
    g.widths = {0.5 * w, 0.5 * w};
    g.amplitudes = {a, a};
  }
  return g;
}

/// `sigma`, when non-empty, holds per-sample standard deviations and turns
/// the fit into weighted least squares (periodograms have noise
/// proportional to the spectrum itself).
inline FitResult fit_lorentzian(std::span<const double> x, std::span<const double> y, int n_peaks,
                                const std::optional<FitResult>& init = std::nullopt, const LmOptions& opt = {},
                                std::span<const double> sigma = {}) {
  if (n_peaks != 1 && n_peaks != 2) throw DomainError("fit_lorentzian supports 1 or 2 peaks");
  if (x.size() != y.size()) throw DomainError("fit_lorentzian: axis and values differ in length");
  if (!sigma.empty() && sigma.size() != x.size()) throw DomainError("fit_lorentzian: sigma has the wrong length");
  for (const double s : sigma)
    if (!(s > 0.0)) throw DomainError("fit_lorentzian: sigma entries must be positive");
  const std::size_t min_samples = 8 * (3 * static_cast<std::size_t>(n_peaks) + 1);
  if (x.size() < min_samples)
    throw DomainError("fit window needs at least " + std::to_string(min_samples) + " samples");
  const auto norm = detail::normalize_window(x, y);
  const FitResult guess = init ? *init : lorentzian_initial_guess(x, y, n_peaks);
  if (guess.centers.size() != static_cast<std::size_t>(n_peaks))
    throw DomainError("initial guess has the wrong number of peaks");

  // p = [offset, (center, log width, log amplitude) per peak], normalized units
  std::vector<double> p{guess.offset / norm.ys};
  for (int k = 0; k < n_peaks; ++k) {
    p.push_back((guess.centers[k] - norm.x0) / norm.xs);
    p.push_back(std::log(guess.widths[k] / norm.xs));
    p.push_back(std::log(std::max(guess.amplitudes[k], 1e-300) / norm.ys));
  }
  std::vector<double> xn(x.size()), yn(y.size()), wt(x.size(), 1.0);
  double mean_sigma = 0.0;
  for (const double s : sigma) mean_sigma += s / static_cast<double>(sigma.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xn[i] = (x[i] - norm.x0) / norm.xs;
    yn[i] = y[i] / norm.ys;
    if (!sigma.empty()) wt[i] = mean_sigma / sigma[i];
  }
  const std::size_t np = p.size();
  auto eval = [&](const std::vector<double>& q, std::vector<double>& r, std::vector<double>* jac) {
    for (std::size_t i = 0; i < xn.size(); ++i) {
      double f = q[0];
      for (int k = 0; k < n_peaks; ++k) {
        const double c = q[1 + 3 * k], w = std::exp(q[2 + 3 * k]), a = std::exp(q[3 + 3 * k]);
        const double d = xn[i] - c;
        const double den = d * d + w * w;
        const double shape = w * w / den;
        f += a * shape;
        if (jac) {
          double* row = &(*jac)[i * np + 1 + 3 * k];
          row[0] = 2.0 * a * shape * d / den * wt[i];
          row[1] = 2.0 * a * shape * d * d / den * wt[i];
          row[2] = a * shape * wt[i];
        }
      }
      if (jac) (*jac)[i * np] = wt[i];
      r[i] = (f - yn[i]) * wt[i];
    }
  };
  const auto lm = levenberg_marquardt(eval, p, xn.size(), opt);

  FitResult out;
  out.offset = lm.params[0] * norm.ys;
  std::vector<std::size_t> order(static_cast<std::size_t>(n_peaks));
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return lm.params[1 + 3 * a] < lm.params[1 + 3 * b]; });
  bool inside = true;
  for (const std::size_t k : order) {
    const double c = norm.x0 + norm.xs * lm.params[1 + 3 * k];
    out.centers.push_back(c);
    out.widths.push_back(norm.xs * std::exp(lm.params[2 + 3 * k]));
    out.amplitudes.push_back(norm.ys * std::exp(lm.params[3 + 3 * k]));
    inside = inside && c >= x.front() && c <= x.back();
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += std::pow(out.evaluate(x[i]) - y[i], 2);
  out.residual_norm = std::sqrt(ss / static_cast<double>(x.size()));
  out.converged = lm.converged && inside && std::isfinite(out.residual_norm);
  out.iterations = lm.iterations;
  return out;
}

inline FitResult fit_lorentzian(const SpectrumGrid& g, int n_peaks, const std::optional<FitResult>& init = std::nullopt) {
  return fit_lorentzian(g.omega, g.s_nps, n_peaks, init);
}

// --- thermal harmonic oscillator -----------------------------------------------------

/// Displacement spectrum of a damped oscillator in equilibrium at T:
/// S_x(omega) = (2 k_B T gamma / m) / ((omega_m^2 - omega^2)^2 + gamma^2 omega^2),
/// which integrates to k_B T / (m omega_m^2) over all omega / 2 pi.
inline double thermal_displacement_spectrum(double omega, double mass, double omega_m, double gamma, double temperature) {
  const double d = omega_m * omega_m - omega * omega;
  return 2.0 * kBoltzmann * temperature * gamma / mass / (d * d + gamma * gamma * omega * omega);
}

struct ThermalFitRequest {
  double temperature = 300.0;
  bool fit_mass = true;
  bool fit_omega = true;
  bool fit_gamma = true;
  // Known values for parameters not fitted; starting points otherwise
  // (estimated from the data when absent).
  std::optional<double> mass;
  std::optional<double> omega_m;
  std::optional<double> gamma;
};

struct ThermalFit {
  double mass_fit = 0.0;
  double omega_m_fit = 0.0;
  double gamma_fit = 0.0;
  double temperature_assumed = 0.0;
  double area_ratio = 0.0;  // two-sided window area / (k_B T / m omega_m^2)
  bool area_check_passed = false;  // |area_ratio - 1| <= 5%
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

inline ThermalFit fit_thermal_spectrum(std::span<const double> x, std::span<const double> y, const ThermalFitRequest& req,
                                       const LmOptions& opt = {}) {
  if (x.size() != y.size() || x.size() < 3) throw DomainError("fit_thermal_spectrum: need matching axis and values");
  const int n_free = int(req.fit_mass) + int(req.fit_omega) + int(req.fit_gamma);
  if (n_free == 0) throw DomainError("fit_thermal_spectrum: nothing to fit");
  if (n_free == 3 && x.size() < 32)
    throw DomainError("mass, frequency and damping are not identifiable from fewer than 32 samples");
  if ((!req.fit_mass && !req.mass) || (!req.fit_omega && !req.omega_m) || (!req.fit_gamma && !req.gamma))
    throw DomainError("fit_thermal_spectrum: a fixed parameter needs a known value");
  if (!(req.temperature > 0.0)) throw DomainError("fit_thermal_spectrum: temperature must be > 0");
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  if (*ymin == *ymax) throw DomainError("fit window is degenerate: all values are equal");

  // Starting values from the resonance shape.
  const std::size_t ipk = static_cast<std::size_t>(ymax - y.begin());
  const double w0 = req.omega_m.value_or(x[ipk]);
  const double fwhm = 2.0 * detail::half_width_at(x, y, ipk, 0.0);
  const double g_start = req.gamma.value_or(fwhm);
  const double m_start = req.mass.value_or(2.0 * kBoltzmann * req.temperature / (g_start * w0 * w0 * *ymax));

  const double s = w0;
  const double ys = *ymax;
  std::vector<double> q(x.size()), yn(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    q[i] = x[i] / s;
    yn[i] = y[i] / ys;
  }
  // full = [log m, q0 = omega_m / s, log h = log(gamma / s)]
  std::array<double, 3> full{std::log(m_start), w0 / s, std::log(g_start / s)};
  const std::array<bool, 3> free{req.fit_mass, req.fit_omega, req.fit_gamma};
  std::vector<double> p;
  for (std::size_t k = 0; k < 3; ++k)
    if (free[k]) p.push_back(full[k]);
  const double c_unit = 2.0 * kBoltzmann * req.temperature / (s * s * s * ys);
  const std::size_t np = p.size();

  auto unpack = [&](const std::vector<double>& v) {
    auto f = full;
    std::size_t j = 0;
    for (std::size_t k = 0; k < 3; ++k)
      if (free[k]) f[k] = v[j++];
    return f;
  };
  auto eval = [&](const std::vector<double>& v, std::vector<double>& r, std::vector<double>* jac) {
    const auto f = unpack(v);
    const double cm = c_unit * std::exp(-f[0]);
    const double q0 = f[1], h = std::exp(f[2]);
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double d = q0 * q0 - q[i] * q[i];
      const double den = d * d + h * h * q[i] * q[i];
      const double val = cm * h / den;
      r[i] = val - yn[i];
      if (jac) {
        const std::array<double, 3> grad{-val, -val * 4.0 * q0 * d / den, val * (1.0 - 2.0 * h * h * q[i] * q[i] / den)};
        std::size_t j = 0;
        for (std::size_t k = 0; k < 3; ++k)
          if (free[k]) (*jac)[i * np + j++] = grad[k];
      }
    }
  };
  const auto lm = levenberg_marquardt(eval, p, q.size(), opt);
  const auto f = unpack(lm.params);

  ThermalFit out;
  out.mass_fit = std::exp(f[0]);
  out.omega_m_fit = f[1] * s;
  out.gamma_fit = std::exp(f[2]) * s;
  out.temperature_assumed = req.temperature;
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) area += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  // the window holds positive frequencies only; the spectrum is even in omega
  out.area_ratio = 2.0 * area / kTwoPi / (kBoltzmann * req.temperature / (out.mass_fit * out.omega_m_fit * out.omega_m_fit));
  out.area_check_passed = std::abs(out.area_ratio - 1.0) <= 0.05;
  out.residual_norm = ys * std::sqrt(2.0 * lm.cost / static_cast<double>(x.size()));
  out.converged = lm.converged && out.mass_fit > 0.0 && std::isfinite(out.residual_norm);
  out.iterations = lm.iterations;
  return out;
}

}  // namespace nms
