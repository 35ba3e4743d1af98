#ifndef L1L2_PROX_ORACLE_HPP
#define L1L2_PROX_ORACLE_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>

#include "l1l2/linalg.hpp"
#include "l1l2/prox.hpp"

namespace l1l2 {

namespace detail {

/// Golden-section minimization of a unimodal function on [lo, hi].
template <typename F>
double golden_section(F&& f, double lo, double hi, double abs_tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c), fd = f(d);
  while (hi - lo > abs_tol) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Numerical reference minimizer of ||x||_1 - gamma ||x||_2 + ||x - y||^2 / (2 beta)
/// over ||x||_2 <= d, for n <= 4. Does not use the closed-form case analysis.
///
/// A minimizer agrees in sign with y, so write x = sign(y) * r * u with u >= 0,
/// ||u||_2 = 1. At fixed radius r the objective is affine in u with slope
/// c_i = 1 - |y_i| / beta. For every candidate support the best unit direction
/// is found exactly, and the remaining 1-D problem in r is solved by a uniform
/// grid of `grid` points followed by golden-section refinement. The candidate
/// with the smallest true objective wins; x = 0 is always a candidate.
inline Vector prox_oracle(std::span<const double> y, const ProxParams& p, std::size_t grid = 400) {
  p.validate();
  const std::size_t n = y.size();
  if (n == 0 || n > 4) throw std::invalid_argument("prox_oracle: dimension must be between 1 and 4");
  if (grid < 200) throw std::invalid_argument("prox_oracle: grid must be at least 200");

  Vector best(n, 0.0);
  double best_val = prox_objective(best, y, p);

  Vector slope(n);
  for (std::size_t i = 0; i < n; ++i) slope[i] = 1.0 - std::abs(y[i]) / p.beta;
  const double yy = dot(y, y);

  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    // unit direction u >= 0 supported on mask minimizing <slope, u>
    Vector u(n, 0.0);
    double neg_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if ((mask >> i) & 1u && slope[i] < 0.0) neg_norm += slope[i] * slope[i];
    double kappa;
    if (neg_norm > 0.0) {
      neg_norm = std::sqrt(neg_norm);
      for (std::size_t i = 0; i < n; ++i)
        if ((mask >> i) & 1u && slope[i] < 0.0) u[i] = -slope[i] / neg_norm;
      kappa = -neg_norm;
    } else {
      std::size_t arg = n;
      for (std::size_t i = 0; i < n; ++i)
        if ((mask >> i) & 1u && (arg == n || slope[i] < slope[arg])) arg = i;
      u[arg] = 1.0;
      kappa = slope[arg];
    }

    const auto radial = [&](double r) { return r * r / (2.0 * p.beta) + (kappa - p.gamma) * r + yy / (2.0 * p.beta); };
    std::size_t best_j = 0;
    double best_r_val = radial(0.0);
    for (std::size_t j = 1; j <= grid; ++j) {
      const double v = radial(p.d * static_cast<double>(j) / static_cast<double>(grid));
      if (v < best_r_val) {
        best_r_val = v;
        best_j = j;
      }
    }
    const double step = p.d / static_cast<double>(grid);
    const double lo = best_j == 0 ? 0.0 : step * static_cast<double>(best_j - 1);
    const double hi = best_j == grid ? p.d : step * static_cast<double>(best_j + 1);
    double r = detail::golden_section(radial, lo, hi, 1e-13 * std::max(1.0, p.d));
    // the interval endpoints are candidates too (constrained optimum on the sphere)
    for (double cand : {lo, hi})
      if (radial(cand) < radial(r)) r = cand;

    Vector x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) x[i] = (y[i] < 0.0 ? -1.0 : 1.0) * r * u[i];
    const double val = prox_objective(x, y, p);
    if (val < best_val) {
      best_val = val;
      best = std::move(x);
    }
  }
  return best;
}

}  // namespace l1l2

#endif  // L1L2_PROX_ORACLE_HPP
