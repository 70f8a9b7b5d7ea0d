// nms-sim: command-line front end.
//
// Exit codes: 0 success, 1 unexpected failure, 2 usage or configuration
// error, 3 unstable operating point, 4 oracle guard tripped.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nms/nms.hpp"

namespace {

using namespace nms;

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kUnstable = 3, kGuard = 4 };

struct Common {
  std::string config;
  std::string out;
  std::optional<double> power_w;
  std::optional<double> detuning_hz;

  SystemParams params() const {
    SystemParams p = config.empty() ? SystemParams::reference_device() : load_config(config);
    if (power_w) p.power = *power_w;
    if (detuning_hz) p.detuning = hz_to_angular(*detuning_hz);
    try {
      p.validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    return p;
  }
};

struct GridFlags {
  std::optional<double> start_hz, stop_hz;
  std::size_t points = 4096;

  GridSpec spec(const SystemParams& p) const {
    GridSpec g = GridSpec::around_mechanics(p, points);
    if (start_hz) g.start = hz_to_angular(*start_hz);
    if (stop_hz) g.stop = hz_to_angular(*stop_hz);
    g.validate();
    return g;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "parameter file (defaults to the built-in reference device)");
  cmd->add_option("--out", c.out, "output file (CSV or JSON); stdout when omitted");
  cmd->add_option("--power-w", c.power_w, "override drive power (W)");
  cmd->add_option("--detuning-hz", c.detuning_hz, "override detuning (Hz)");
}

void add_grid(CLI::App* cmd, GridFlags& g) {
  cmd->add_option("--grid-start-hz", g.start_hz, "first grid frequency (Hz)");
  cmd->add_option("--grid-stop-hz", g.stop_hz, "last grid frequency (Hz)");
  cmd->add_option("--grid-points", g.points, "number of grid points");
}

/// Writes to --out when given, otherwise to stdout.
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
  if (path.empty()) {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file '" + path + "'");
  write(f);
  if (!f) throw Error("failed writing '" + path + "'");
}

std::string fmt(double v) { return csv::format_double(v); }

// --- modes -------------------------------------------------------------------------------

int cmd_modes(const Common& c) {
  const SystemParams p = c.params();
  const DerivedRates r = derive_rates(p);
  const DriftModel d = build_drift(p, r.g);
  if (!is_stable(damped_eigenvalues(d))) throw InstabilityError("operating point is unstable (a drift eigenvalue has Re >= 0)");
  const auto undamped = undamped_frequencies(p, r.g);
  const auto damped = damped_modes(p, r.g);
  const auto threshold = splitting_threshold(p);

  const std::vector<std::pair<std::string, std::string>> rows{
      {"power_w", fmt(p.power)},
      {"detuning_hz", fmt(angular_to_hz(p.detuning))},
      {"g0_hz", fmt(angular_to_hz(r.g0))},
      {"g_hz", fmt(angular_to_hz(r.g))},
      {"alpha", fmt(r.alpha)},
      {"n_bar", fmt(r.n_bar)},
      {"gamma_m_eff_hz", fmt(angular_to_hz(r.gamma_m_eff))},
      {"omega_plus_undamped_hz", fmt(angular_to_hz(undamped.plus))},
      {"omega_minus_undamped_hz", fmt(angular_to_hz(undamped.minus))},
      {"omega_plus_hz", fmt(angular_to_hz(damped.omega_plus))},
      {"omega_minus_hz", fmt(angular_to_hz(damped.omega_minus))},
      {"gamma_plus_hz", fmt(angular_to_hz(damped.gamma_plus))},
      {"gamma_minus_hz", fmt(angular_to_hz(damped.gamma_minus))},
      {"splitting_hz", fmt(angular_to_hz(undamped.plus - undamped.minus))},
      {"damped_splitting_hz", fmt(angular_to_hz(damped.splitting()))},
      {"threshold_g_hz", threshold ? fmt(angular_to_hz(threshold->g)) : std::string{}},
      {"threshold_power_w", threshold ? fmt(threshold->power) : std::string{}},
  };
  for (const auto& [k, v] : rows) std::printf("%-24s %s\n", k.c_str(), v.empty() ? "n/a" : v.c_str());
  if (!c.out.empty()) {
    emit(c.out, [&](std::ostream& o) {
      std::vector<std::string> header, values;
      for (const auto& [k, v] : rows) {
        header.push_back(k);
        values.push_back(v);
      }
      csv::write_row(o, header);
      csv::write_row(o, values);
    });
  }
  return kOk;
}

// --- spectrum -----------------------------------------------------------------------------

void write_spectrum(std::ostream& o, const SpectrumGrid& s) {
  csv::write_row(o, {"freq_hz", "s_pos", "s_neg", "s_nps"});
  for (std::size_t i = 0; i < s.size(); ++i)
    csv::write_row(o, {fmt(angular_to_hz(s.omega[i])), fmt(s.s_pos[i]), fmt(s.s_neg[i]), fmt(s.s_nps[i])});
}

int cmd_spectrum(const Common& c, const GridFlags& grid) {
  const SystemParams p = c.params();
  const GridSpec spec = grid.spec(p);
  const auto s = noise_power_spectrum(p, driven_coupling(p), spec);
  emit(c.out, [&](std::ostream& o) { write_spectrum(o, s); });
  return kOk;
}

// --- sweep --------------------------------------------------------------------------------

struct SweepFlags {
  std::string variable;
  std::string what = "modes";
  double start = 0.0, stop = 0.0;
  std::size_t points = 0;
};

int cmd_sweep(const Common& c, const SweepFlags& s, const GridFlags& grid) {
  if (!(s.start < s.stop)) throw DomainError("sweep needs start < stop");
  if (s.points < 2 || s.points > 100000) throw DomainError("sweep needs 2 <= points <= 100000");
  const SystemParams base = c.params();
  const bool power = s.variable == "power";
  std::vector<double> xs(s.points);
  for (std::size_t i = 0; i < s.points; ++i)
    xs[i] = s.start + (s.stop - s.start) * static_cast<double>(i) / static_cast<double>(s.points - 1);
  auto params_at = [&](double x) {
    SystemParams p = base;
    if (power) p.power = x;
    else p.detuning = hz_to_angular(x);
    p.validate();
    return p;
  };

  std::vector<std::vector<std::optional<double>>> rows(s.points);
  std::vector<std::string> header;
  if (s.what == "modes") {
    header = {"x", "omega_plus_hz", "omega_minus_hz", "gamma_plus_hz", "gamma_minus_hz"};
    std::vector<std::optional<std::array<Complex, 2>>> raw(s.points);
    parallel_for(s.points, [&](std::size_t i) {
      try {
        const SystemParams p = params_at(xs[i]);
        const auto e = damped_eigenvalues(build_drift(p, driven_coupling(p)));
        if (is_stable(e)) raw[i] = std::array<Complex, 2>{e.eigenvalues[0], e.eigenvalues[1]};
      } catch (const Error&) {
      }
    });
    std::optional<ModePair> previous;
    for (std::size_t i = 0; i < s.points; ++i) {
      if (!raw[i]) {
        rows[i] = {std::nullopt, std::nullopt, std::nullopt, std::nullopt};
        continue;
      }
      const ModePair m = track_modes(std::span(&*raw[i], 1), previous).front();
      previous = m;
      const NormalModes nm = to_normal_modes(m);
      rows[i] = {angular_to_hz(nm.omega_plus), angular_to_hz(nm.omega_minus), angular_to_hz(nm.gamma_plus),
                 angular_to_hz(nm.gamma_minus)};
    }
  } else {
    header = {"x", "center_low_hz", "center_high_hz"};
    parallel_for(s.points, [&](std::size_t i) {
      rows[i] = {std::nullopt, std::nullopt};
      try {
        const SystemParams p = params_at(xs[i]);
        const auto spec = noise_power_spectrum(p, driven_coupling(p), grid.spec(p), 1);
        const auto fit = fit_lorentzian(spec, 2);
        if (fit.converged) rows[i] = {angular_to_hz(fit.centers[0]), angular_to_hz(fit.centers[1])};
      } catch (const Error&) {
      }
    });
  }

  std::size_t failed = 0;
  for (const auto& r : rows)
    if (!r.front()) ++failed;
  emit(c.out, [&](std::ostream& o) {
    csv::write_row(o, header);
    for (std::size_t i = 0; i < s.points; ++i) {
      std::vector<std::string> cells{fmt(xs[i])};
      for (const auto& v : rows[i]) cells.push_back(csv::format_cell(v));
      csv::write_row(o, cells);
    }
  });
  if (failed) std::fprintf(stderr, "warning: %zu of %zu sweep points failed (empty fields)\n", failed, s.points);
  return kOk;
}

// --- oracle -------------------------------------------------------------------------------

struct OracleFlags {
  std::uint64_t seed = 42;
  double dt = TrajectoryConfig{}.dt;
  std::size_t steps = TrajectoryConfig{}.n_steps;
  std::size_t segments = TrajectoryConfig{}.n_segments;
  std::size_t trajectories = 1;
};

int cmd_oracle(const Common& c, const OracleFlags& f) {
  const SystemParams p = c.params();
  const DriftModel d = build_drift(p, driven_coupling(p));
  const NoiseModel n = NoiseModel::thermal(thermal_occupation(p));
  if (!is_stable(damped_eigenvalues(d))) throw InstabilityError("operating point is unstable (a drift eigenvalue has Re >= 0)");
  TrajectoryConfig cfg;
  cfg.seed = f.seed;
  cfg.dt = f.dt;
  cfg.n_steps = f.steps;
  cfg.n_segments = f.segments;
  // keep the record spacing at the default 100 ns whatever the step
  const double record_dt = TrajectoryConfig{}.dt * static_cast<double>(TrajectoryConfig{}.record_every);
  cfg.record_every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(record_dt / f.dt)));

  const auto modes = damped_modes(p, driven_coupling(p));
  const double hi_mode = std::max(modes.omega_plus, modes.omega_minus);
  const double lo_mode = std::min(modes.omega_plus, modes.omega_minus);
  const double width = std::max(modes.gamma_plus, modes.gamma_minus);
  const double max_omega = hi_mode + 10.0 * width;
  const auto run = run_oracle(d, n, cfg, f.trajectories, max_omega);

  const double lo = std::max(lo_mode - 6.0 * width, 0.0), hi = hi_mode + 6.0 * width;
  std::vector<double> window_x, window_y;
  for (std::size_t k = 0; k < run.periodogram.size(); ++k) {
    const double w = run.periodogram.omega[k];
    if (w < lo || w > hi) continue;
    window_x.push_back(w);
    window_y.push_back(std::hypot(spectral_density(gamma_matrix(d, n, w)), spectral_density(gamma_matrix(d, n, -w))));
  }
  const int n_peaks = extract_peaks(window_x, window_y).size() >= 2 ? 2 : 1;
  const auto cmp = compare_peaks(run.periodogram, d, n, lo, hi, n_peaks);

  emit(c.out, [&](std::ostream& o) {
    csv::write_row(o, {"freq_hz", "oracle_s_pos", "oracle_s_neg", "oracle_s_nps", "analytic_s_pos", "analytic_s_neg",
                       "analytic_s_nps"});
    const auto& g = run.periodogram;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double sp = spectral_density(gamma_matrix(d, n, g.omega[k]));
      const double sn = spectral_density(gamma_matrix(d, n, -g.omega[k]));
      csv::write_row(o, {fmt(angular_to_hz(g.omega[k])), fmt(g.s_pos[k] - kVacuumLevel), fmt(g.s_neg[k] - kVacuumLevel),
                         fmt(std::hypot(g.s_pos[k] - kVacuumLevel, g.s_neg[k] - kVacuumLevel)), fmt(sp), fmt(sn),
                         fmt(std::hypot(sp, sn))});
    }
  });

  std::FILE* report = c.out.empty() ? stderr : stdout;
  std::fprintf(report, "generator mt19937_64 + ziggurat normal, seed %llu, %zu trajectories (seeds seed..seed+%zu)\n",
               static_cast<unsigned long long>(f.seed), f.trajectories, f.trajectories - 1);
  std::fprintf(report, "dt %.3g s, %zu steps, %zu segments, fit window %.1f-%.1f kHz\n", f.dt, f.steps, f.segments,
               angular_to_hz(lo) / 1e3, angular_to_hz(hi) / 1e3);
  for (std::size_t i = 0; i < cmp.deltas.size(); ++i)
    std::fprintf(report, "peak %zu: oracle %.3f kHz, analytic %.3f kHz, delta %+.3f kHz\n", i + 1,
                 angular_to_hz(cmp.oracle_fit.centers[i]) / 1e3, angular_to_hz(cmp.analytic_fit.centers[i]) / 1e3,
                 angular_to_hz(cmp.deltas[i]) / 1e3);
  if (!cmp.converged()) std::fprintf(report, "warning: a peak fit did not converge\n");
  return kOk;
}

// --- dressed ------------------------------------------------------------------------------

int cmd_dressed(const Common& c, int n_max, int m_max) {
  const SystemParams p = c.params();
  const double g = driven_coupling(p);
  const auto u = undamped_frequencies(p, g);
  const double laser = p.omega_c - p.detuning;
  const auto ladder = dressed_ladder(u.plus, u.minus, laser, n_max, m_max);
  const auto nl = nonlinear_levels(p, n_max, m_max);

  using nlohmann::ordered_json;
  ordered_json j;
  j["g_hz"] = angular_to_hz(g);
  j["omega_plus_hz"] = angular_to_hz(u.plus);
  j["omega_minus_hz"] = angular_to_hz(u.minus);
  j["laser_rad_s"] = laser;
  auto& levels = j["levels"] = ordered_json::array();
  for (const auto& lv : ladder.levels) levels.push_back({{"n", lv.n}, {"m", lv.m}, {"energy_j", lv.energy}});
  auto& tr = j["transitions"] = ordered_json::array();
  for (const auto& t : ladder.transitions)
    tr.push_back({{"from", {t.from.n, t.from.m}},
                  {"to", {t.to.n, t.to.m}},
                  {"sideband_hz", angular_to_hz(t.sideband)},
                  {"anti_stokes_rad_s", t.anti_stokes},
                  {"stokes_rad_s", t.stokes}});
  j["g0_hz"] = angular_to_hz(nl.g0);
  j["anharmonic_splitting_hz"] = angular_to_hz(nl.rabi_splitting);
  auto& nll = j["nonlinear_levels"] = ordered_json::array();
  for (const auto& lv : nl.levels)
    nll.push_back({{"k", lv.k}, {"n", lv.n}, {"energy_j", lv.energy}, {"displacement", lv.displacement}});
  emit(c.out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  return kOk;
}

// --- fit ----------------------------------------------------------------------------------

int cmd_fit(const std::string& in_path, const std::string& out, int peaks) {
  std::ifstream in(in_path);
  if (!in) throw ConfigError("cannot open input file '" + in_path + "'");
  const auto data = csv::read_spectrum(in);
  std::vector<double> omega(data.freq_hz.size());
  for (std::size_t i = 0; i < omega.size(); ++i) omega[i] = hz_to_angular(data.freq_hz[i]);
  const auto fit = fit_lorentzian(omega, data.value, peaks);
  emit(out, [&](std::ostream& o) {
    csv::write_row(o, {"peak", "center_hz", "fwhm_hz", "amplitude", "offset", "residual_rms", "converged"});
    for (std::size_t k = 0; k < fit.centers.size(); ++k)
      csv::write_row(o, {std::to_string(k + 1), fmt(angular_to_hz(fit.centers[k])), fmt(angular_to_hz(fit.fwhm(k))),
                         fmt(fit.amplitudes[k]), fmt(fit.offset), fmt(fit.residual_norm), fit.converged ? "1" : "0"});
  });
  return fit.converged ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Normal-mode splitting simulator for a driven optomechanical cavity"};
  app.require_subcommand(1);

  Common common;
  GridFlags grid;
  SweepFlags sweep;
  OracleFlags oracle;
  int n_max = 2, m_max = 2;
  std::string fit_in;
  int fit_peaks = 2;

  auto* modes = app.add_subcommand("modes", "coupling rates, normal modes and threshold");
  add_common(modes, common);

  auto* spectrum = app.add_subcommand("spectrum", "emission spectrum S(w), S(-w), S_NPS on a grid");
  add_common(spectrum, common);
  add_grid(spectrum, grid);

  auto* sw = app.add_subcommand("sweep", "normal modes or fitted spectrum peaks across detuning or power");
  add_common(sw, common);
  add_grid(sw, grid);
  sw->add_option("--variable", sweep.variable, "detuning (Hz) or power (W)")
      ->required()
      ->check(CLI::IsMember({"detuning", "power"}));
  sw->add_option("--what", sweep.what, "modes or spectrum-peaks")->check(CLI::IsMember({"modes", "spectrum-peaks"}));
  sw->add_option("--start", sweep.start, "first sweep value")->required();
  sw->add_option("--stop", sweep.stop, "last sweep value")->required();
  sw->add_option("--points", sweep.points, "number of sweep points")->required();

  auto* orc = app.add_subcommand("oracle", "time-domain cross-check of the analytic spectrum");
  add_common(orc, common);
  orc->add_option("--seed", oracle.seed, "seed of the first trajectory");
  orc->add_option("--dt-s", oracle.dt, "integration step (s)");
  orc->add_option("--steps", oracle.steps, "recorded integration steps per trajectory");
  orc->add_option("--segments", oracle.segments, "periodogram segments per trajectory");
  orc->add_option("--trajectories", oracle.trajectories, "independent trajectories")->check(CLI::PositiveNumber);

  auto* dressed = app.add_subcommand("dressed", "dressed-state ladder and nonlinear levels as JSON");
  add_common(dressed, common);
  dressed->add_option("--n-max", n_max, "highest + mode index");
  dressed->add_option("--m-max", m_max, "highest - mode index");

  auto* fit = app.add_subcommand("fit", "Lorentzian fit of an external freq_hz,value spectrum");
  fit->add_option("--in", fit_in, "input CSV")->required();
  fit->add_option("--out", common.out, "output CSV; stdout when omitted");
  fit->add_option("--peaks", fit_peaks, "1 or 2")->check(CLI::Range(1, 2));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*modes) return cmd_modes(common);
    if (*spectrum) return cmd_spectrum(common, grid);
    if (*sw) return cmd_sweep(common, sweep, grid);
    if (*orc) return cmd_oracle(common, oracle);
    if (*dressed) return cmd_dressed(common, n_max, m_max);
    if (*fit) return cmd_fit(fit_in, common.out, fit_peaks);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kUsage;
  } catch (const GuardError& e) {
    std::fprintf(stderr, "oracle guard: %s\n", e.what());
    return kGuard;
  } catch (const InstabilityError& e) {
    std::fprintf(stderr, "unstable: %s\n", e.what());
    return kUnstable;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
