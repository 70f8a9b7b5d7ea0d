// Acceptance run: one PASS/FAIL line per criterion. Without arguments all
// criteria run; `--criterion N` runs one. Exit status is nonzero when any
// selected criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nms/nms.hpp"
#include "support.hpp"

using namespace nms;
using nms::testing::at_power;
using nms::testing::relative;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double khz(double omega) { return angular_to_hz(omega) / 1e3; }

const SystemParams kRef = SystemParams::reference_device();

Outcome coupling_rates() {
  const std::array<double, 4> powers{0.6e-3, 3.8e-3, 6.9e-3, 10.7e-3};
  const std::array<double, 4> expected_khz{78.0, 192.0, 260.0, 325.0};
  Outcome o{true, "g/2pi [kHz]:"};
  for (std::size_t i = 0; i < powers.size(); ++i) {
    const double g = khz(driven_coupling(at_power(kRef, powers[i], 1.02)));
    const double err = relative(g, expected_khz[i]);
    o.pass = o.pass && err <= 0.05;
    o.detail += fmt(" %.1f (want %.0f, %.1f%%)", g, expected_khz[i], 100.0 * err);
  }
  return o;
}

Outcome splitting_equals_g() {
  const SystemParams p = at_power(kRef, 10.7e-3);
  const double g = driven_coupling(p);
  const auto spectrum = noise_power_spectrum(p, g, GridSpec::around_mechanics(p));
  const auto fit = fit_lorentzian(spectrum, 2);
  const double sep = fit.centers[1] - fit.centers[0];
  const auto undamped = undamped_frequencies(p, g);
  const auto damped = damped_modes(p, g);
  const bool pass = fit.converged && relative(sep, g) <= 0.10;
  return {pass, fmt("fit separation %.1f kHz vs g %.1f kHz (%.1f%%, converged %d); "
                    "undamped w+-w- %.1f kHz, damped %.1f kHz",
                    khz(sep), khz(g), 100.0 * relative(sep, g), int(fit.converged),
                    khz(undamped.plus - undamped.minus), khz(damped.splitting()))};
}

Outcome closed_form_consistency() {
  double worst = 0.0;
  int cases = 0;
  for (const double detuning : {0.6, 0.8, 1.0, 1.2, 1.4}) {
    SystemParams p = kRef;
    p.detuning = detuning * p.omega_m;
    for (int k = 1; k <= 10; ++k) {
      const double g = 0.09 * k * std::sqrt(p.detuning * p.omega_m);
      const auto exact = undamped_frequencies(p, g);
      const auto m = damped_modes(p, g, 1e-6);
      worst = std::max({worst, relative(m.omega_plus, exact.plus), relative(m.omega_minus, exact.minus)});
      ++cases;
    }
  }
  return {worst <= 1e-6, fmt("%d (g, detuning) points, worst relative error %.2e (limit 1e-6)", cases, worst)};
}

Outcome threshold_behaviour() {
  const SystemParams base = at_power(kRef, 0.0);
  auto modes_at = [&](double watts) {
    const SystemParams p = at_power(base, watts);
    return damped_modes(p, driven_coupling(p));
  };
  double worst_split_below = 0.0, least_damping_gap_below = 1e300;
  for (int i = 0; i < 25; ++i) {
    const double watts = 1e-5 * std::pow(0.49e-3 / 1e-5, i / 24.0);
    const auto m = modes_at(watts);
    worst_split_below = std::max(worst_split_below, std::abs(m.splitting()));
    least_damping_gap_below = std::min(least_damping_gap_below, std::abs(m.gamma_plus - m.gamma_minus));
  }
  const auto high = modes_at(10.7e-3);
  // merge/split must be monotone across the whole sweep
  bool monotone = true;
  double prev_split = -1.0, prev_gap = 1e300;
  for (int i = 0; i <= 120; ++i) {
    const auto m = modes_at(10.7e-3 * i / 120.0);
    const double split = std::abs(m.splitting()), gap = std::abs(m.gamma_plus - m.gamma_minus);
    const double tol = 1e-6 * kRef.omega_m;
    monotone = monotone && split >= prev_split - tol && gap <= prev_gap + tol;
    prev_split = split;
    prev_gap = gap;
  }
  const auto threshold = splitting_threshold(base);
  const bool threshold_between = threshold && threshold->power > 0.5e-3 && threshold->power < 10.7e-3;
  const bool pass = worst_split_below < hz_to_angular(1e3) && least_damping_gap_below > hz_to_angular(50e3) &&
                    std::abs(high.splitting()) > hz_to_angular(100e3) &&
                    std::abs(high.gamma_plus - high.gamma_minus) < hz_to_angular(40e3) && monotone && threshold_between;
  return {pass, fmt("below 0.5 mW: max |w+-w-| %.3g kHz, min |g+-g-| %.1f kHz; at 10.7 mW: |w+-w-| %.1f kHz, "
                    "|g+-g-| %.3g kHz; monotone %d; threshold %.2f mW",
                    khz(worst_split_below), khz(least_damping_gap_below), khz(std::abs(high.splitting())),
                    khz(std::abs(high.gamma_plus - high.gamma_minus)), int(monotone),
                    threshold ? threshold->power * 1e3 : -1.0)};
}

Outcome avoided_crossing() {
  const std::size_t n = 2001;
  std::vector<std::array<Complex, 2>> raw(n);
  std::vector<double> detuning(n), coupling(n);
  double undamped_min = 1e300, undamped_at = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 0.5 + static_cast<double>(i) / static_cast<double>(n - 1);
    const SystemParams p = at_power(kRef, 10.7e-3, x);
    detuning[i] = x;
    coupling[i] = driven_coupling(p);
    const auto e = damped_eigenvalues(build_drift(p, coupling[i]));
    raw[i] = {e.eigenvalues[0], e.eigenvalues[1]};
    const auto u = undamped_frequencies(p, coupling[i]);
    if (u.plus - u.minus < undamped_min) {
      undamped_min = u.plus - u.minus;
      undamped_at = x;
    }
  }
  const auto tracked = track_modes(raw);
  std::size_t best = 0;
  double gap_min = 1e300;
  for (std::size_t i = 0; i < n; ++i) {
    const double gap = std::abs(tracked[i].plus.imag() - tracked[i].minus.imag());
    if (gap < gap_min) {
      gap_min = gap;
      best = i;
    }
  }
  const double g = coupling[best];
  const bool pass = std::abs(detuning[best] - 1.0) <= 0.03 && relative(gap_min, g) <= 0.10;
  return {pass, fmt("damped minimum gap %.1f kHz at detuning %.4f w_m vs g %.1f kHz (%.1f%%); "
                    "undamped minimum gap %.1f kHz at %.4f w_m",
                    khz(gap_min), detuning[best], khz(g), 100.0 * relative(gap_min, g), khz(undamped_min), undamped_at)};
}

Outcome oracle_equivalence() {
  const SystemParams p = at_power(kRef, 10.7e-3);
  const DriftModel d = build_drift(p, driven_coupling(p));
  const NoiseModel n = NoiseModel::thermal(thermal_occupation(p));
  TrajectoryConfig cfg;  // 0.5 ns steps, 100 ns records, 25 ms per trajectory
  const std::size_t trajectories = 16;
  const auto run = run_oracle(d, n, cfg, trajectories, 2.0 * p.omega_m);
  const auto cmp = compare_peaks(run.periodogram, d, n, 0.4 * p.omega_m, 1.6 * p.omega_m, 2);

  const Mat4 v = steady_state_covariance(d, n);
  double worst = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      worst = std::max(worst, std::abs(run.covariance(i, j) - v(i, j)) / std::sqrt(v(i, i) * v(j, j)));

  const double limit = hz_to_angular(2e3);
  const bool pass = cmp.converged() && cmp.max_abs_delta() <= limit && worst <= 0.10;
  return {pass, fmt("%zu x %.0f ms: peak deltas %.2f, %.2f kHz (limit 2); covariance worst entry %.2f%% (limit 10%%)",
                    trajectories, 1e3 * cfg.dt * static_cast<double>(cfg.n_steps), khz(cmp.deltas.at(0)),
                    khz(cmp.deltas.at(1)), 100.0 * worst)};
}

Outcome property_suites() {
  std::mt19937_64 rng(20240607);
  const int draws = 256;
  const Mat4 j = symplectic_form();
  double sjs = 0.0, sls = 0.0, herm = 0.0, trace_err = 0.0, det_err = 0.0, min_nps = 1e300;
  for (int c = 0; c < draws; ++c) {
    const auto sys = nms::testing::random_stable_system(rng);
    const SystemParams& p = sys.params;
    const auto st = symplectic_transform(p, sys.g);
    const Mat4& s = st.s_matrix;
    const Mat4 m = hamiltonian_matrix(p.detuning, p.omega_m, sys.g);
    const Mat4 lambda = Mat4::diagonal({st.omega_plus, st.omega_plus, st.omega_minus, st.omega_minus});
    sjs = std::max(sjs, norm_inf(s * j * transpose(s) - j));
    sls = std::max(sls, norm_inf(transpose(s) * lambda * s - m) / norm_inf(m));

    const DriftModel d = build_drift(p, sys.g);
    const NoiseModel n = NoiseModel::thermal(10.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng));
    for (const double w : {0.0, 0.5 * p.omega_m, p.omega_m, st.omega_minus, st.omega_plus, 2.0 * p.detuning}) {
      for (const double sign : {1.0, -1.0}) {
        const CMat4 gm = gamma_matrix(d, n, sign * w);
        herm = std::max(herm, norm_inf(gm - adjoint(gm)) / norm_inf(gm));
      }
      const double nps = std::hypot(spectral_density(gamma_matrix(d, n, w)), spectral_density(gamma_matrix(d, n, -w)));
      min_nps = std::min(min_nps, nps);
    }

    const auto ev = damped_eigenvalues(d).eigenvalues;
    Complex sum{}, prod{1.0, 0.0};
    double scale = 0.0;
    for (const auto& z : ev) {
      sum += z;
      prod *= z;
      scale += std::abs(z);
    }
    trace_err = std::max(trace_err, std::abs(sum - trace(d.drift)) / scale);
    det_err = std::max(det_err, std::abs(prod - determinant(d.drift)) / std::abs(determinant(d.drift)));
  }
  const bool pass = sjs <= 1e-9 && sls <= 1e-9 && herm <= 1e-10 && min_nps >= 0.0 && trace_err <= 1e-9 &&
                    det_err <= 1e-9;
  return {pass, fmt("%d draws: |SJS^T-J| %.1e, |S^T L S-M|/|M| %.1e, Gamma hermiticity %.1e, min S_NPS %.2e, "
                    "trace %.1e, det %.1e",
                    draws, sjs, sls, herm, min_nps, trace_err, det_err)};
}

Outcome fitting_round_trips() {
  std::vector<double> x(2001);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = -1.0 + 2.0 * static_cast<double>(i) / 2000.0;
  FitResult truth1;
  truth1.centers = {0.05};
  truth1.widths = {0.08};
  truth1.amplitudes = {3.0};
  truth1.offset = 0.2;
  FitResult truth2;
  truth2.centers = {-0.2, 0.25};
  truth2.widths = {0.07, 0.1};
  truth2.amplitudes = {2.0, 1.3};
  truth2.offset = 0.1;

  auto worst_error = [](const FitResult& f, const FitResult& t) {
    double e = 0.0;
    for (std::size_t k = 0; k < t.centers.size(); ++k)
      e = std::max({e, std::abs(f.centers[k] - t.centers[k]) / t.widths[k], relative(f.widths[k], t.widths[k]),
                    relative(f.amplitudes[k], t.amplitudes[k])});
    return e;
  };
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 1.0);
  double clean = 0.0, noisy = 0.0;
  for (const FitResult* t : {&truth1, &truth2}) {
    std::vector<double> y(x.size()), yn(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      y[i] = t->evaluate(x[i]);
      yn[i] = y[i] * (1.0 + 0.05 * noise(rng));  // multiplicative, 5%
    }
    const int np = static_cast<int>(t->centers.size());
    const auto fc = fit_lorentzian(x, y, np);
    const auto fn = fit_lorentzian(x, yn, np);
    clean = std::max(clean, fc.converged ? worst_error(fc, *t) : 1e300);
    noisy = std::max(noisy, fn.converged ? worst_error(fn, *t) : 1e300);
  }

  const SystemParams p = kRef;
  std::vector<double> w, s;
  for (int i = 0; i < 4001; ++i) {
    w.push_back(p.omega_m + (i - 2000) * 0.01 * p.gamma_m0);
    s.push_back(thermal_displacement_spectrum(w.back(), p.mass, p.omega_m, p.gamma_m0, p.temperature));
  }
  ThermalFitRequest req;
  req.temperature = p.temperature;
  const auto th = fit_thermal_spectrum(w, s, req);
  const double mass_err = relative(th.mass_fit, p.mass);
  const bool pass = clean <= 1e-8 && noisy <= 0.02 && th.converged && mass_err <= 0.01;
  return {pass, fmt("noiseless worst %.1e (limit 1e-8), 5%% noise worst %.2f%% (limit 2%%), thermal mass %.2e relative",
                    clean, 100.0 * noisy, mass_err)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"coupling rates at the four drive powers", coupling_rates},
      {"spectral splitting equals g", splitting_equals_g},
      {"damped eigenfrequencies match the closed form", closed_form_consistency},
      {"threshold: branch merge and split", threshold_behaviour},
      {"avoided crossing in a detuning sweep", avoided_crossing},
      {"time-domain oracle equivalence", oracle_equivalence},
      {"property suites over random stable draws", property_suites},
      {"fitting round trips", fitting_round_trips},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i + 1) != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("criterion %zu %s: %s | %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
