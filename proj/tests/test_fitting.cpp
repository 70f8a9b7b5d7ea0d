#include <catch_amalgamated.hpp>

#include <random>

#include "nms/fitting.hpp"
#include "nms/spectrum.hpp"
#include "support.hpp"

using namespace nms;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return x;
}

std::vector<double> lorentzians(const std::vector<double>& x, const FitResult& m) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = m.evaluate(x[i]);
  return y;
}

FitResult model(std::vector<double> c, std::vector<double> w, std::vector<double> a, double offset) {
  FitResult m;
  m.centers = std::move(c);
  m.widths = std::move(w);
  m.amplitudes = std::move(a);
  m.offset = offset;
  return m;
}
}  // namespace

TEST_CASE("peak extraction") {
  const auto x = linspace(0.0, 1.0, 101);
  std::vector<double> mono(x.size()), para(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mono[i] = x[i] * x[i];
    para[i] = 1.0 - (x[i] - 0.4137) * (x[i] - 0.4137);
  }
  CHECK(extract_peaks(x, mono).empty());
  const auto peaks = extract_peaks(x, para);
  REQUIRE(peaks.size() == 1);
  // parabolic interpolation is exact for a parabola
  CHECK_THAT(peaks[0].center, WithinAbs(0.4137, 1e-12));
  CHECK_THAT(peaks[0].height, WithinAbs(1.0, 1e-12));
}

TEST_CASE("single and double Lorentzian round trips") {
  const auto x = linspace(-10.0, 10.0, 801);
  const FitResult one = model({1.3}, {0.7}, {5.0}, 0.2);
  const auto f1 = fit_lorentzian(x, lorentzians(x, one), 1);
  REQUIRE(f1.converged);
  CHECK_THAT(f1.centers[0], WithinAbs(1.3, 1e-8));
  CHECK_THAT(f1.widths[0], WithinRel(0.7, 1e-8));
  CHECK_THAT(f1.amplitudes[0], WithinRel(5.0, 1e-8));
  CHECK_THAT(f1.offset, WithinAbs(0.2, 1e-8));
  CHECK_THAT(f1.fwhm(0), WithinRel(1.4, 1e-8));

  const FitResult two = model({-2.0, 2.5}, {0.8, 1.1}, {3.0, 2.0}, 0.0);
  const auto f2 = fit_lorentzian(x, lorentzians(x, two), 2);
  REQUIRE(f2.converged);
  CHECK_THAT(f2.centers[0], WithinAbs(-2.0, 1e-7));
  CHECK_THAT(f2.centers[1], WithinAbs(2.5, 1e-7));
  CHECK(f2.residual_norm < 1e-9);
}

TEST_CASE("doublet at omega_m +- g/2 is recovered") {
  const SystemParams p = SystemParams::reference_device();
  const double g = 1.5 * p.kappa;
  const auto x = linspace(p.omega_m - 3.0 * g, p.omega_m + 3.0 * g, 2001);
  const FitResult truth = model({p.omega_m - 0.5 * g, p.omega_m + 0.5 * g}, {0.5 * p.kappa, 0.5 * p.kappa}, {1.0, 1.0}, 0.0);
  const auto f = fit_lorentzian(x, lorentzians(x, truth), 2);
  REQUIRE(f.converged);
  CHECK_THAT(f.centers[0], WithinRel(truth.centers[0], 0.01));
  CHECK_THAT(f.centers[1], WithinRel(truth.centers[1], 0.01));
  CHECK_THAT(f.centers[1] - f.centers[0], WithinRel(g, 0.01));
}

TEST_CASE("fits tolerate multiplicative noise") {
  const auto x = linspace(-10.0, 10.0, 2001);
  const FitResult two = model({-1.5, 1.5}, {0.9, 0.9}, {4.0, 4.0}, 0.1);
  auto y = lorentzians(x, two);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 0.05);
  for (auto& v : y) v *= 1.0 + n(rng);
  const auto f = fit_lorentzian(x, y, 2);
  REQUIRE(f.converged);
  CHECK(std::abs(f.centers[0] + 1.5) < 0.03);
  CHECK(std::abs(f.centers[1] - 1.5) < 0.03);
}

TEST_CASE("refitting a fit is a fixed point") {
  const auto x = linspace(-10.0, 10.0, 801);
  const FitResult two = model({-2.0, 2.5}, {0.8, 1.1}, {3.0, 2.0}, 0.0);
  const auto y = lorentzians(x, two);
  const auto f = fit_lorentzian(x, y, 2);
  const auto again = fit_lorentzian(x, y, 2, f);
  for (std::size_t k = 0; k < 2; ++k) CHECK_THAT(again.centers[k], WithinAbs(f.centers[k], 1e-9));
}

TEST_CASE("fits transform with the frequency axis") {
  const auto x = linspace(-10.0, 10.0, 801);
  const FitResult two = model({-2.0, 2.5}, {0.8, 1.1}, {3.0, 2.0}, 0.0);
  const auto y = lorentzians(x, two);
  const double a = 2.0 * 3.14159e5, b = 6.0e6;
  std::vector<double> xs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xs[i] = a * x[i] + b;
  const auto f = fit_lorentzian(x, y, 2);
  const auto fs = fit_lorentzian(xs, y, 2);
  REQUIRE(fs.converged);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK_THAT(fs.centers[k], WithinRel(a * f.centers[k] + b, 1e-9));
    CHECK_THAT(fs.widths[k], WithinRel(a * f.widths[k], 1e-7));
  }
}

TEST_CASE("sigma weighting") {
  const auto x = linspace(-10.0, 10.0, 401);
  const FitResult one = model({0.5}, {1.0}, {2.0}, 0.0);
  const auto y = lorentzians(x, one);
  const std::vector<double> sigma(x.size(), 3.0);
  const auto f = fit_lorentzian(x, y, 1, std::nullopt, {}, sigma);
  REQUIRE(f.converged);
  CHECK_THAT(f.centers[0], WithinAbs(0.5, 1e-8));
  const std::vector<double> bad(x.size(), 0.0);
  CHECK_THROWS_AS(fit_lorentzian(x, y, 1, std::nullopt, {}, bad), DomainError);
  CHECK_THROWS_AS(fit_lorentzian(x, y, 1, std::nullopt, {}, std::vector<double>(3, 1.0)), DomainError);
}

TEST_CASE("fit windows are validated") {
  const auto x = linspace(0.0, 1.0, 10);
  CHECK_THROWS_AS(fit_lorentzian(x, x, 1), DomainError);
  CHECK_THROWS_AS(fit_lorentzian(x, x, 3), DomainError);
  const auto xl = linspace(0.0, 1.0, 200);
  CHECK_THROWS_AS(fit_lorentzian(xl, x, 1), DomainError);
  const std::vector<double> flat(xl.size(), 1.0);
  CHECK_THROWS_AS(fit_thermal_spectrum(xl, flat, {}), DomainError);
  CHECK_THROWS_AS(fit_thermal_spectrum(linspace(0.0, 1.0, 20), linspace(0.0, 1.0, 20), {}), DomainError);
}

TEST_CASE("thermal spectrum round trip") {
  const SystemParams p = SystemParams::reference_device();
  const auto x = linspace(p.omega_m - 40.0 * p.gamma_m0, p.omega_m + 40.0 * p.gamma_m0, 4001);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] = thermal_displacement_spectrum(x[i], p.mass, p.omega_m, p.gamma_m0, p.temperature);
  ThermalFitRequest req;
  req.temperature = p.temperature;
  const auto f = fit_thermal_spectrum(x, y, req);
  REQUIRE(f.converged);
  CHECK_THAT(f.mass_fit, WithinRel(p.mass, 1e-6));
  CHECK_THAT(f.omega_m_fit, WithinRel(p.omega_m, 1e-9));
  CHECK_THAT(f.gamma_fit, WithinRel(p.gamma_m0, 1e-6));
  // a +-40 linewidth window holds about 98% of the area
  CHECK(f.area_check_passed);

  // assuming twice the temperature doubles the inferred mass
  req.temperature = 2.0 * p.temperature;
  const auto hot = fit_thermal_spectrum(x, y, req);
  CHECK_THAT(hot.mass_fit, WithinRel(2.0 * f.mass_fit, 1e-6));
}
