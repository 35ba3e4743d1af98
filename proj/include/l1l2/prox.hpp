#ifndef L1L2_PROX_HPP
#define L1L2_PROX_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>

#include "l1l2/linalg.hpp"

namespace l1l2 {

/// Componentwise soft thresholding S(y, alpha).
inline Vector soft_threshold(std::span<const double> y, double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("soft_threshold: alpha must be nonnegative");
  Vector out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = y[i];
    out[i] = v > alpha ? v - alpha : (v < -alpha ? v + alpha : 0.0);
  }
  return out;
}

/// Parameters of prox_{beta rho_gamma} with rho_gamma = ||.||_1 - gamma ||.||_2 + indicator(||.||_2 <= d).
struct ProxParams {
  double beta = 1.0;
  double gamma = 1.0;
  double d = 1.0;

  void validate() const {
    if (!(beta > 0.0) || !(gamma > 0.0) || !(d > 0.0))
      throw std::invalid_argument("ProxParams: beta, gamma and d must be positive");
  }
};

/// Which branch of the closed form produced the result, ordered by ||y||_inf:
///   I   ||y||_inf > beta                       shrink, then push outward
///   II  ||y||_inf = beta                       set-valued, norm min{beta gamma, d}
///   III (1 - gamma) beta < ||y||_inf < beta    1-sparse
///   IV  ||y||_inf <= (1 - gamma) beta          zero
enum class ProxCase { I = 1, II = 2, III = 3, IV = 4 };

inline std::string_view to_string(ProxCase c) {
  switch (c) {
    case ProxCase::I: return "I";
    case ProxCase::II: return "II";
    case ProxCase::III: return "III";
    case ProxCase::IV: return "IV";
  }
  return "?";
}

struct ProxSelection {
  ProxCase case_id = ProxCase::IV;
  std::optional<std::size_t> selected_index;  // set for the 1-sparse branches II and III
  Vector result;
};

/// Objective minimized by prox_{beta rho_gamma}(y) on the ball (+inf outside).
inline double prox_objective(std::span<const double> x, std::span<const double> y, const ProxParams& p) {
  const double xn = norm2(x);
  if (xn > p.d * (1.0 + 1e-12)) return std::numeric_limits<double>::infinity();
  const double dist = distance(x, y);
  return norm1(x) - p.gamma * xn + dist * dist / (2.0 * p.beta);
}

namespace detail {

inline std::size_t lowest_argmax_abs(std::span<const double> y) {
  std::size_t best = 0;
  double best_abs = y.empty() ? 0.0 : std::abs(y[0]);
  for (std::size_t i = 1; i < y.size(); ++i)
    if (std::abs(y[i]) > best_abs) {
      best_abs = std::abs(y[i]);
      best = i;
    }
  return best;
}

inline ProxSelection one_sparse(ProxCase c, std::span<const double> y, double magnitude) {
  ProxSelection sel{c, lowest_argmax_abs(y), Vector(y.size(), 0.0)};
  const std::size_t i = *sel.selected_index;
  sel.result[i] = y[i] < 0.0 ? -magnitude : magnitude;
  return sel;
}

}  // namespace detail

/// Closed-form prox of beta * rho_gamma. Set-valued branches return the
/// sign-matching representative supported on the lowest index of maximal |y_i|.
inline ProxSelection prox_rho(std::span<const double> y, const ProxParams& p) {
  p.validate();
  if (y.empty()) throw std::invalid_argument("prox_rho: y must be nonempty");
  const double ymax = norm_inf(y);
  const double bg = p.beta * p.gamma;

  if (ymax <= (1.0 - p.gamma) * p.beta) return {ProxCase::IV, std::nullopt, Vector(y.size(), 0.0)};

  if (ymax > p.beta) {
    Vector z = soft_threshold(y, p.beta);
    const double zn = norm2(z);
    const double scale = zn <= p.d - bg ? (zn + bg) / zn : p.d / zn;
    for (double& v : z) v *= scale;
    return {ProxCase::I, std::nullopt, std::move(z)};
  }

  if (ymax == p.beta) return detail::one_sparse(ProxCase::II, y, std::min(bg, p.d));

  return detail::one_sparse(ProxCase::III, y, std::min(ymax + (p.gamma - 1.0) * p.beta, p.d));
}

}  // namespace l1l2

#endif  // L1L2_PROX_HPP
