#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>

#include "nms/error.hpp"
#include "nms/units.hpp"

namespace nms {

/// Which zero-point length enters the single-photon coupling:
/// `printed` uses sqrt(hbar / (m omega_m)), `half` uses sqrt(hbar / (2 m omega_m)).
enum class ZeroPointConvention { printed, half };

/// Device and drive parameters. Rates are angular (rad/s), SI otherwise.
struct SystemParams {
  double omega_m = 0.0;      // mechanical frequency
  double gamma_m0 = 0.0;     // natural mechanical amplitude damping
  double kappa = 0.0;        // input-coupler amplitude decay
  double kappa_bar = 0.0;    // second-mirror amplitude decay
  double length = 0.0;       // cavity length (m)
  double omega_c = 0.0;      // optical resonance (rad/s)
  double mass = 0.0;         // effective mass (kg)
  double temperature = 0.0;  // bath temperature (K)
  double power = 0.0;        // drive power (W)
  double detuning = 0.0;     // effective detuning, radiation-pressure shift already absorbed
  ZeroPointConvention g0_convention = ZeroPointConvention::printed;

  double kappa_total() const { return kappa + kappa_bar; }

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw DomainError(std::string("invalid parameters: ") + what);
    };
    require(omega_m > 0.0, "omega_m must be > 0");
    require(gamma_m0 >= 0.0, "gamma_m0 must be >= 0");
    require(kappa > 0.0, "kappa must be > 0");
    require(kappa_bar >= 0.0, "kappa_bar must be >= 0");
    require(length > 0.0, "cavity length must be > 0");
    require(omega_c > 0.0, "omega_c must be > 0");
    require(mass > 0.0, "mass must be > 0");
    require(temperature >= 0.0, "temperature must be >= 0");
    require(power >= 0.0, "power must be >= 0");
    require(std::isfinite(detuning), "detuning must be finite");
  }

  /// The 947 kHz micromirror device: split cavity decay 172 + 43 kHz,
  /// 10.7 mW drive on the mechanical resonance, room temperature.
  static SystemParams reference_device() {
    SystemParams p;
    p.omega_m = hz_to_angular(947e3);
    p.gamma_m0 = hz_to_angular(140.0);
    p.kappa = hz_to_angular(172e3);
    p.kappa_bar = hz_to_angular(43e3);
    p.length = 0.025;
    p.omega_c = 1.77e15;
    p.mass = 145e-12;
    p.temperature = 300.0;
    p.power = 10.7e-3;
    p.detuning = p.omega_m;
    return p;
  }
};

struct DerivedRates {
  double g0 = 0.0;           // single-photon coupling (rad/s)
  double g = 0.0;            // drive-enhanced coupling (rad/s)
  double alpha = 0.0;        // mean intracavity amplitude, g / g0
  double n_bar = 0.0;        // thermal phonon occupation
  double gamma_m_eff = 0.0;  // cavity-modified mechanical damping (rad/s)
};

inline double single_photon_coupling(const SystemParams& p) {
  const double zpf_denominator =
      p.g0_convention == ZeroPointConvention::half ? 2.0 * p.mass * p.omega_m : p.mass * p.omega_m;
  return p.omega_c / p.length * std::sqrt(kHbar / zpf_denominator);
}

/// Two-sided cavity form; kappa_bar = 0 recovers the one-sided expression.
inline double driven_coupling(const SystemParams& p) {
  const double kt = p.kappa_total();
  return 2.0 / p.length *
         std::sqrt(p.power * p.kappa * p.omega_c / (p.mass * p.omega_m * (kt * kt + p.detuning * p.detuning)));
}

inline double thermal_occupation(const SystemParams& p) {
  return kBoltzmann * p.temperature / (kHbar * p.omega_m);
}

/// Weak-coupling cooling/heating result. Evaluated for any g; outside the
/// perturbative regime the number is not meaningful.
inline double effective_mechanical_damping(const SystemParams& p, double g) {
  const double kt = p.kappa_total();
  const double dm = p.detuning - p.omega_m;
  const double dp = p.detuning + p.omega_m;
  return p.gamma_m0 + 2.0 * g * g * kt * p.detuning * p.omega_m / ((kt * kt + dm * dm) * (kt * kt + dp * dp));
}

inline DerivedRates derive_rates(const SystemParams& p) {
  DerivedRates r;
  r.g0 = single_photon_coupling(p);
  r.g = driven_coupling(p);
  r.alpha = r.g / r.g0;
  r.n_bar = thermal_occupation(p);
  r.gamma_m_eff = effective_mechanical_damping(p, r.g);
  return r;
}

// --- configuration files -----------------------------------------------------
//
//   # comment
//   omega_m_hz = 947e3
//
// Keys not present keep the reference-device value. Unknown keys, repeated
// keys, and unparsable values are errors that carry the line number.

namespace detail {
inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& text, const std::string& key, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse number '" + text + "'", line);
  }
  if (used != text.size() || !std::isfinite(v))
    throw ConfigError("key '" + key + "': cannot parse number '" + text + "'", line);
  return v;
}
}  // namespace detail

inline SystemParams parse_config(std::istream& in) {
  SystemParams p = SystemParams::reference_device();
  std::set<std::string> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + line + "'", line_no);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("expected 'key = value', got '" + line + "'", line_no);
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'", line_no);

    if (key == "g0_convention") {
      if (value == "printed") p.g0_convention = ZeroPointConvention::printed;
      else if (value == "half") p.g0_convention = ZeroPointConvention::half;
      else throw ConfigError("key 'g0_convention': expected 'printed' or 'half', got '" + value + "'", line_no);
      continue;
    }
    const double v = detail::parse_number(value, key, line_no);
    if (key == "omega_m_hz") p.omega_m = hz_to_angular(v);
    else if (key == "gamma_m0_hz") p.gamma_m0 = hz_to_angular(v);
    else if (key == "kappa_hz") p.kappa = hz_to_angular(v);
    else if (key == "kappa_bar_hz") p.kappa_bar = hz_to_angular(v);
    else if (key == "length_m") p.length = v;
    else if (key == "omega_c_rad_s") p.omega_c = v;
    else if (key == "mass_kg") p.mass = v;
    else if (key == "temperature_k") p.temperature = v;
    else if (key == "power_w") p.power = v;
    else if (key == "detuning_hz") p.detuning = hz_to_angular(v);
    else throw ConfigError("unknown key '" + key + "'", line_no);
  }
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return p;
}

inline SystemParams parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline SystemParams load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace nms
