#ifndef L1L2_SOLVERS_HPP
#define L1L2_SOLVERS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "l1l2/linalg.hpp"
#include "l1l2/model.hpp"
#include "l1l2/prox.hpp"

namespace l1l2 {

/// Halve lambda every `halve_every` iterations; keep it fixed once the
/// iteration count exceeds `freeze_after`.
struct LambdaSchedule {
  std::size_t halve_every = 10;
  std::size_t freeze_after = 500;

  /// lambda used for iteration k (0-based)
  double lambda_at(double lambda0, std::size_t k) const {
    const std::size_t effective = std::min(k, freeze_after);
    return std::ldexp(lambda0, -static_cast<int>(effective / halve_every));
  }
};

struct SolverConfig {
  double alpha_lo = 0.0;
  double alpha_hi = 0.0;
  double eta = 0.5;
  double a = 1e-8;
  std::size_t window = 4;
  double rel_tol = 1e-8;
  std::size_t max_iter = 0;
  std::size_t backtrack_cap = 100;
  std::optional<LambdaSchedule> lambda_schedule;

  /// Fixed step 0.999 / L, at most 500 n iterations.
  static SolverConfig ppga(double lipschitz, std::size_t n) {
    SolverConfig c;
    c.alpha_hi = 0.999 / lipschitz;
    c.alpha_lo = c.alpha_hi;
    c.window = 0;
    c.max_iter = 500 * n;
    return c;
  }

  /// Line-search defaults: step bounds [1e-8 / L, 10 / L]; window 0 is the
  /// monotone variant, window > 0 the nonmonotone one.
  static SolverConfig line_search(double lipschitz, std::size_t n, std::size_t window) {
    SolverConfig c;
    c.alpha_hi = 10.0 / lipschitz;
    c.alpha_lo = 1e-8 / lipschitz;
    c.window = window;
    c.max_iter = 500 * n;
    return c;
  }

  void validate() const {
    if (!(alpha_lo > 0.0) || !(alpha_lo <= alpha_hi))
      throw std::invalid_argument("SolverConfig: need 0 < alpha_lo <= alpha_hi");
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("SolverConfig: eta must lie in (0, 1)");
    if (!(a >= 0.0)) throw std::invalid_argument("SolverConfig: a must be nonnegative");
    if (!(rel_tol >= 0.0)) throw std::invalid_argument("SolverConfig: rel_tol must be nonnegative");
    if (max_iter == 0) throw std::invalid_argument("SolverConfig: max_iter must be positive");
    if (lambda_schedule && lambda_schedule->halve_every == 0)
      throw std::invalid_argument("SolverConfig: lambda schedule period must be positive");
  }
};

enum class Termination { RelTol, MaxIter, LineSearchFail };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::RelTol: return "RelTol";
    case Termination::MaxIter: return "MaxIter";
    case Termination::LineSearchFail: return "LineSearchFail";
  }
  return "?";
}

struct SolverResult {
  Vector x_final;
  /// objective_trace[0] = Q(x^0); objective_trace[k + 1] = Q(x^{k+1}) under
  /// the lambda used by iteration k.
  std::vector<double> objective_trace;
  std::vector<double> step_trace;                // accepted alpha_k
  std::vector<std::size_t> backtrack_trace;      // reductions by eta before acceptance
  std::vector<double> lambda_trace;              // lambda used by iteration k
  std::vector<ProxCase> prox_case_trace;
  std::size_t iterations = 0;
  Termination termination = Termination::MaxIter;
  double stationarity_residual = 0.0;
  double final_lambda = 0.0;
};

namespace detail {

struct StepResult {
  Vector x;
  ProxCase case_id;
};

/// x+ in prox_{alpha (f - C g)}(x - alpha grad) = prox_{beta rho_gamma}(...),
/// beta = alpha lambda, gamma = C / lambda.
inline StepResult prox_gradient_step(const PenaltyObjective& obj, std::span<const double> x,
                                     std::span<const double> grad, double ratio, double alpha) {
  Vector y(x.begin(), x.end());
  axpy(-alpha, grad, y);
  const ProxParams params{alpha * obj.lambda(), ratio / obj.lambda(), obj.problem().d};
  ProxSelection sel = prox_rho(y, params);
  return {std::move(sel.result), sel.case_id};
}

inline void require_feasible_start(const PenaltyObjective& obj, std::span<const double> x0) {
  if (x0.size() != obj.dim()) throw std::invalid_argument("solver: x0 length must equal columns of A");
  if (!std::isfinite(q_lambda(obj, x0)))
    throw std::invalid_argument("solver: x0 must be nonzero and inside the ball");
}

inline double relative_change(std::span<const double> x_new, std::span<const double> x) {
  return distance(x_new, x) / std::max(norm2(x), 1e-300);
}

}  // namespace detail

/// One PPGA step with step size alpha.
inline Vector ppga_step(const PenaltyObjective& obj, std::span<const double> x, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("ppga_step: alpha must be positive");
  const ResidualEval r = obj.residual(x);
  if (is_zero(x) || !inside_ball(x, obj.problem().d)) throw std::domain_error("ppga_step: x is infeasible");
  const double ratio = obj.q_lambda(x, r);
  return detail::prox_gradient_step(obj, x, obj.envelope_gradient(r), ratio, alpha).x;
}

/// ||x - ppga_step(x, alpha)||_2 / (1 + ||x||_2); zero exactly at fixed points.
inline double stationarity_residual(const PenaltyObjective& obj, std::span<const double> x, double alpha) {
  const Vector next = ppga_step(obj, x, alpha);
  return distance(x, next) / (1.0 + norm2(x));
}

/// Upper bound on backtracking reductions per iteration:
/// ceil(log(alpha_hi (a M + L)) / -log(eta) + 1), clamped below at 0. A trial
/// step alpha <= 1 / (a M + L) always satisfies the acceptance test when
/// M bounds ||x||_2 on the level set.
inline std::size_t backtrack_bound(double alpha_hi, double a, double m_bound, double lipschitz, double eta) {
  const double t = std::ceil(-std::log(alpha_hi * (a * m_bound + lipschitz)) / std::log(eta) + 1.0);
  return t > 0.0 ? static_cast<std::size_t>(t) : 0;
}

/// Parameterized proximal-gradient algorithm with a constant step alpha_hi.
inline SolverResult solve_ppga(const PenaltyObjective& obj0, std::span<const double> x0, const SolverConfig& cfg) {
  cfg.validate();
  detail::require_feasible_start(obj0, x0);
  if (!(cfg.alpha_hi < 1.0 / obj0.lipschitz()))
    throw std::invalid_argument("solve_ppga: alpha_hi must be below 1 / L");

  const double alpha = cfg.alpha_hi;
  PenaltyObjective obj = obj0;
  SolverResult res;
  Vector x(x0.begin(), x0.end());
  ResidualEval r = obj.residual(x);
  double q = obj.q_lambda(x, r);
  res.objective_trace.push_back(q);
  res.termination = Termination::MaxIter;

  for (std::size_t k = 0; k < cfg.max_iter; ++k) {
    if (cfg.lambda_schedule) {
      const double lam = cfg.lambda_schedule->lambda_at(obj0.lambda(), k);
      if (lam != obj.lambda()) {
        obj = obj.with_lambda(lam);
        q = obj.q_lambda(x, r);
      }
    }
    auto step = detail::prox_gradient_step(obj, x, obj.envelope_gradient(r), q, alpha);
    ResidualEval r_new = obj.residual(step.x);
    const double q_new = obj.q_lambda(step.x, r_new);

    res.iterations = k + 1;
    res.lambda_trace.push_back(obj.lambda());
    res.prox_case_trace.push_back(step.case_id);
    if (!std::isfinite(q_new)) {
      // unreachable in exact arithmetic for alpha < 1 / L
      res.termination = Termination::LineSearchFail;
      break;
    }
    res.step_trace.push_back(alpha);
    res.backtrack_trace.push_back(0);
    res.objective_trace.push_back(q_new);

    const double rel = detail::relative_change(step.x, x);
    x = std::move(step.x);
    r = std::move(r_new);
    q = q_new;
    if (rel <= cfg.rel_tol) {
      res.termination = Termination::RelTol;
      break;
    }
  }

  res.final_lambda = obj.lambda();
  res.stationarity_residual = stationarity_residual(obj, x, alpha);
  res.x_final = std::move(x);
  return res;
}

/// PPGA with backtracking line search and Barzilai-Borwein trial steps.
/// window == 0 gives the monotone variant; window > 0 accepts against the
/// maximum of the last window + 1 objective values.
inline SolverResult solve_ppga_ls(const PenaltyObjective& obj0, std::span<const double> x0, const SolverConfig& cfg) {
  cfg.validate();
  detail::require_feasible_start(obj0, x0);

  PenaltyObjective obj = obj0;
  const double d = obj.problem().d;
  SolverResult res;
  Vector x(x0.begin(), x0.end());
  ResidualEval r = obj.residual(x);
  Vector grad = obj.envelope_gradient(r);
  double q = obj.q_lambda(x, r);
  res.objective_trace.push_back(q);
  res.termination = Termination::MaxIter;

  std::deque<double> recent;  // last window + 1 values of C_j
  Vector prev_x, prev_grad;
  double last_alpha = cfg.alpha_hi;

  for (std::size_t k = 0; k < cfg.max_iter; ++k) {
    if (cfg.lambda_schedule) {
      const double lam = cfg.lambda_schedule->lambda_at(obj0.lambda(), k);
      if (lam != obj.lambda()) {
        obj = obj.with_lambda(lam);
        q = obj.q_lambda(x, r);
        recent.clear();  // C_j under a different lambda are not comparable
      }
    }
    recent.push_back(q);
    while (recent.size() > cfg.window + 1) recent.pop_front();
    const double reference = *std::max_element(recent.begin(), recent.end());

    double alpha0 = cfg.alpha_hi;
    if (!prev_x.empty()) {
      const Vector dx = subtract(x, prev_x);
      const Vector dg = subtract(grad, prev_grad);
      const double curvature = dot(dx, dg);
      if (curvature != 0.0) alpha0 = std::clamp(dot(dx, dx) / std::abs(curvature), cfg.alpha_lo, cfg.alpha_hi);
    }

    std::optional<detail::StepResult> accepted;
    ResidualEval r_new;
    double q_new = 0.0;
    double alpha = alpha0;
    std::size_t reductions = 0;
    for (;; ++reductions) {
      auto trial = detail::prox_gradient_step(obj, x, grad, q, alpha);
      if (!is_zero(trial.x) && inside_ball(trial.x, d)) {
        ResidualEval r_trial = obj.residual(trial.x);
        const double q_trial = obj.q_lambda(trial.x, r_trial);
        const double dist = distance(trial.x, x);
        if (q_trial <= reference - 0.5 * cfg.a * dist * dist) {
          accepted = std::move(trial);
          r_new = std::move(r_trial);
          q_new = q_trial;
          break;
        }
      }
      if (reductions == cfg.backtrack_cap) break;
      alpha *= cfg.eta;
    }

    res.iterations = k + 1;
    res.lambda_trace.push_back(obj.lambda());
    if (!accepted) {
      res.termination = Termination::LineSearchFail;
      break;
    }
    last_alpha = alpha;
    res.step_trace.push_back(alpha);
    res.backtrack_trace.push_back(reductions);
    res.prox_case_trace.push_back(accepted->case_id);
    res.objective_trace.push_back(q_new);

    const double rel = detail::relative_change(accepted->x, x);
    prev_x = std::move(x);
    prev_grad = std::move(grad);
    x = std::move(accepted->x);
    r = std::move(r_new);
    grad = obj.envelope_gradient(r);
    q = q_new;
    if (rel <= cfg.rel_tol) {
      res.termination = Termination::RelTol;
      break;
    }
  }

  res.final_lambda = obj.lambda();
  res.stationarity_residual = stationarity_residual(obj, x, last_alpha);
  res.x_final = std::move(x);
  return res;
}

/// ADMM for min weight ||x||_1 + 0.5 ||A x - b||_2^2 run for exactly `iters`
/// iterations; returns the sparse split variable z.
inline Vector admm_l1_warm_start(const DenseMatrix& a, std::span<const double> b, double weight, std::size_t iters,
                                 double rho = 1.0) {
  if (b.size() != a.rows()) throw std::invalid_argument("admm_l1_warm_start: b length must equal rows");
  if (!(weight > 0.0)) throw std::invalid_argument("admm_l1_warm_start: weight must be positive");
  if (iters == 0) throw std::invalid_argument("admm_l1_warm_start: iters must be positive");
  if (!(rho > 0.0)) throw std::invalid_argument("admm_l1_warm_start: rho must be positive");

  const std::size_t m = a.rows(), n = a.cols();
  const bool wide = m < n;
  // (A^T A + rho I)^{-1} via the smaller system; wide matrices use
  // (A^T A + rho I)^{-1} q = (q - A^T (rho I + A A^T)^{-1} A q) / rho.
  DenseMatrix small = wide ? gram_rows(a) : gram_cols(a);
  for (std::size_t i = 0; i < small.rows(); ++i) small(i, i) += rho;
  const Cholesky factor(small);

  const Vector atb = matvec_transposed(a, b);
  Vector x(n, 0.0), z(n, 0.0), u(n, 0.0), q(n);
  for (std::size_t it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) q[i] = atb[i] + rho * (z[i] - u[i]);
    if (wide) {
      const Vector w = factor.solve(matvec(a, q));
      const Vector atw = matvec_transposed(a, w);
      for (std::size_t i = 0; i < n; ++i) x[i] = (q[i] - atw[i]) / rho;
    } else {
      x = factor.solve(q);
    }
    Vector xu(n);
    for (std::size_t i = 0; i < n; ++i) xu[i] = x[i] + u[i];
    z = soft_threshold(xu, weight / rho);
    for (std::size_t i = 0; i < n; ++i) u[i] += x[i] - z[i];
  }
  return z;
}

/// Start point inside the eps-tube: A^+ b pushed toward x_l1 until the
/// residual norm reaches eps. Returns x_l1 if it already lies in the tube.
inline Vector noisy_warm_start(const ProblemInstance& prob, std::span<const double> x_l1, double tol = 1e-10) {
  if (x_l1.size() != prob.a.cols()) throw std::invalid_argument("noisy_warm_start: x_l1 length must equal columns");
  Vector res = matvec(prob.a, x_l1);
  for (std::size_t i = 0; i < res.size(); ++i) res[i] -= prob.b[i];
  const double rn = norm2(res);
  if (rn <= prob.eps) return Vector(x_l1.begin(), x_l1.end());
  Vector x = min_norm_lsq(prob.a, prob.b, tol);
  const double t = prob.eps / rn;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += t * (x_l1[i] - x[i]);
  return x;
}

}  // namespace l1l2

#endif  // L1L2_SOLVERS_HPP
