#pragma once

// Damped least squares with multiplicative lambda adaptation. Small dense
// problems only (a handful of parameters).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <vector>

namespace nms {

struct LmOptions {
  double lambda0 = 1e-3;
  double lambda_factor = 10.0;     // x on reject, / on accept
  double relative_step_tol = 1e-10;
  int max_iterations = 500;
  double lambda_max = 1e16;        // beyond this no decreasing step exists
};

enum class LmStop { small_step, zero_residual, no_decrease, iteration_cap };

struct LmResult {
  std::vector<double> params;
  double cost = 0.0;  // 0.5 * sum r^2
  int iterations = 0;
  bool converged = false;
  LmStop reason = LmStop::iteration_cap;
};

namespace detail {
/// Solves the SPD system a x = b in place (row-major n x n); false if a is
/// not numerically positive definite.
inline bool cholesky_solve(std::vector<double> a, std::vector<double>& b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    a[j * n + j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / a[j * n + j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return true;
}
}  // namespace detail

/// `eval(params, residuals, jacobian)` fills residuals (size m) and, when
/// `jacobian` is non-null, the row-major m x n Jacobian d r_i / d p_j.
template <typename Eval>
LmResult levenberg_marquardt(Eval&& eval, std::vector<double> params, std::size_t m, const LmOptions& opt = {}) {
  const std::size_t n = params.size();
  std::vector<double> r(m), r_trial(m), jac(m * n), jtj(n * n), grad(n), trial(n);
  auto half_sq = [](const std::vector<double>& v) {
    return 0.5 * std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
  };

  LmResult res;
  eval(params, r, &jac);
  double cost = half_sq(r);
  double lambda = opt.lambda0;
  bool fresh = true;

  while (res.iterations < opt.max_iterations) {
    if (cost == 0.0) {
      res.converged = true;
      res.reason = LmStop::zero_residual;
      break;
    }
    if (fresh) {
      std::fill(jtj.begin(), jtj.end(), 0.0);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        const double* row = &jac[i * n];
        for (std::size_t a = 0; a < n; ++a) {
          grad[a] += row[a] * r[i];
          for (std::size_t b = a; b < n; ++b) jtj[a * n + b] += row[a] * row[b];
        }
      }
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < a; ++b) jtj[a * n + b] = jtj[b * n + a];
      fresh = false;
    }
    ++res.iterations;

    double diag_max = 0.0;
    for (std::size_t a = 0; a < n; ++a) diag_max = std::max(diag_max, jtj[a * n + a]);
    auto damped = jtj;
    for (std::size_t a = 0; a < n; ++a)
      damped[a * n + a] += lambda * std::max(jtj[a * n + a], 1e-12 * diag_max);
    std::vector<double> step(n);
    for (std::size_t a = 0; a < n; ++a) step[a] = -grad[a];
    const bool solved = detail::cholesky_solve(std::move(damped), step, n);

    if (solved) {
      for (std::size_t a = 0; a < n; ++a) trial[a] = params[a] + step[a];
      eval(trial, r_trial, nullptr);
      const double trial_cost = half_sq(r_trial);
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        double step_norm = 0.0, param_norm = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
          step_norm += step[a] * step[a];
          param_norm += params[a] * params[a];
        }
        params = trial;
        eval(params, r, &jac);
        cost = half_sq(r);
        fresh = true;
        lambda = std::max(lambda / opt.lambda_factor, 1e-15);
        if (std::sqrt(step_norm) <= opt.relative_step_tol * (std::sqrt(param_norm) + opt.relative_step_tol)) {
          res.converged = true;
          res.reason = LmStop::small_step;
          break;
        }
        continue;
      }
    }
    lambda *= opt.lambda_factor;
    if (lambda > opt.lambda_max) {
      res.converged = true;
      res.reason = LmStop::no_decrease;
      break;
    }
  }
  res.params = std::move(params);
  res.cost = cost;
  return res;
}

}  // namespace nms
