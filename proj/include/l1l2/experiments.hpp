#ifndef L1L2_EXPERIMENTS_HPP
#define L1L2_EXPERIMENTS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "l1l2/linalg.hpp"
#include "l1l2/model.hpp"
#include "l1l2/random.hpp"
#include "l1l2/solvers.hpp"

namespace l1l2 {

enum class MatrixFamily { Gaussian, OversampledDCT };
enum class SolverKind { PPGA, PPGA_ML, PPGA_NL };

/// Auto: l1-ADMM point, moved into the eps-tube when eps > 0.
/// L1: the l1-ADMM point as is.
enum class WarmStart { Auto, L1 };

inline std::string_view to_string(MatrixFamily f) {
  return f == MatrixFamily::Gaussian ? "gaussian" : "dct";
}

inline std::string_view to_string(SolverKind s) {
  switch (s) {
    case SolverKind::PPGA: return "PPGA";
    case SolverKind::PPGA_ML: return "PPGA_ML";
    case SolverKind::PPGA_NL: return "PPGA_NL";
  }
  return "?";
}

/// eps = 0, or eps = scale * sqrt(m)
struct EpsRule {
  bool scaled_sqrt_m = false;
  double scale = 0.0;

  static EpsRule zero() { return {}; }
  static EpsRule scaled(double c) { return {true, c}; }

  double eps(std::size_t m) const { return scaled_sqrt_m ? scale * std::sqrt(static_cast<double>(m)) : 0.0; }
};

struct ExperimentSpec {
  MatrixFamily matrix_family = MatrixFamily::OversampledDCT;
  std::size_t m = 64;
  std::size_t n = 1024;
  std::size_t s = 5;
  double F = 1.0;  // DCT coherence factor
  double D = 1.0;  // dynamic-range exponent (DCT family)
  double sigma = 0.0;
  EpsRule eps_rule = EpsRule::zero();
  bool normalize_cols = false;  // Gaussian family only
  std::size_t trials = 1;
  std::uint64_t seed = 1;
  double lambda0 = 0.008;
  bool lambda_schedule_on = false;
  SolverKind solver = SolverKind::PPGA_NL;
  double d = 1e7;
  double eta = 0.5;
  double a = 1e-8;
  std::size_t window = 4;  // used by PPGA_NL
  double rel_tol = 1e-8;
  std::size_t max_iter = 0;  // 0 means 500 n
  double admm_weight = 0.08;
  std::size_t admm_iters = 0;  // 0 means 2 n
  double admm_rho = 1.0;
  WarmStart warm_start = WarmStart::Auto;
  double success_tol = 1e-3;

  void validate() const {
    if (m == 0 || n == 0) throw std::invalid_argument("m and n must be positive");
    if (s == 0 || s > n) throw std::invalid_argument("s must satisfy 1 <= s <= n");
    if (m > n) throw std::invalid_argument("m must not exceed n");
    if (trials == 0) throw std::invalid_argument("trials must be positive");
    if (matrix_family == MatrixFamily::OversampledDCT && !(F > 0.0)) throw std::invalid_argument("F must be positive");
    if (!(D >= 0.0)) throw std::invalid_argument("D must be nonnegative");
    if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be nonnegative");
    if (eps_rule.scaled_sqrt_m && !(eps_rule.scale >= 0.0)) throw std::invalid_argument("eps_scale must be nonnegative");
    if (!(lambda0 > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(d > 0.0)) throw std::invalid_argument("d must be positive");
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in (0, 1)");
    if (!(a >= 0.0)) throw std::invalid_argument("a must be nonnegative");
    if (!(rel_tol >= 0.0)) throw std::invalid_argument("rel_tol must be nonnegative");
    if (!(admm_weight > 0.0)) throw std::invalid_argument("admm_weight must be positive");
    if (!(admm_rho > 0.0)) throw std::invalid_argument("admm_rho must be positive");
  }

  std::size_t effective_max_iter() const { return max_iter ? max_iter : 500 * n; }
  std::size_t effective_admm_iters() const { return admm_iters ? admm_iters : 2 * n; }
  bool uses_tube_start() const { return warm_start == WarmStart::Auto && eps_rule.eps(m) > 0.0; }
};

// ---------------------------------------------------------------- generators

/// Oversampled DCT matrix with column j (1-based) equal to cos(2 pi w j / F) / sqrt(m).
inline DenseMatrix dct_matrix_from_weights(std::span<const double> w, std::size_t n, double F) {
  if (!(F > 0.0)) throw std::invalid_argument("dct matrix: F must be positive");
  const std::size_t m = w.size();
  DenseMatrix a(m, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a(i, j) = scale * std::cos(2.0 * std::numbers::pi * w[i] * static_cast<double>(j + 1) / F);
  return a;
}

template <typename Rng>
DenseMatrix gen_dct_matrix(std::size_t m, std::size_t n, double F, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector w(m);
  for (double& v : w) v = unif(rng);
  return dct_matrix_from_weights(w, n, F);
}

/// i.i.d. standard normal entries; optionally each column shifted to zero mean
/// and scaled to unit Euclidean norm.
template <typename Rng>
DenseMatrix gen_gaussian_matrix(std::size_t m, std::size_t n, bool normalize_cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix a(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = normal(rng);
  if (normalize_cols) {
    for (std::size_t j = 0; j < n; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < m; ++i) mean += a(i, j);
      mean /= static_cast<double>(m);
      double nrm = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        a(i, j) -= mean;
        nrm += a(i, j) * a(i, j);
      }
      nrm = std::sqrt(nrm);
      if (nrm > 0.0)
        for (std::size_t i = 0; i < m; ++i) a(i, j) /= nrm;
    }
  }
  return a;
}

/// Uniform random support of size s (partial Fisher-Yates), sorted ascending.
template <typename Rng>
std::vector<std::size_t> sample_support(std::size_t n, std::size_t s, Rng& rng) {
  if (s > n) throw std::invalid_argument("sample_support: s must not exceed n");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < s; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(s);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// s-sparse ground truth. DCT family: sign(randn) * 10^(D * rand); Gaussian
/// family: standard normal nonzeros (D is ignored).
template <typename Rng>
Vector gen_ground_truth(std::size_t n, std::size_t s, MatrixFamily family, double D, Rng& rng) {
  const auto support = sample_support(n, s, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector x(n, 0.0);
  for (std::size_t i : support) {
    if (family == MatrixFamily::OversampledDCT) {
      const double sign = normal(rng) < 0.0 ? -1.0 : 1.0;
      x[i] = sign * std::pow(10.0, D * unif(rng));
    } else {
      double v = 0.0;
      while (v == 0.0) v = normal(rng);
      x[i] = v;
    }
  }
  return x;
}

/// Per-trial instance: A, x_g, b = A x_g + sigma e, eps from the rule, d from ExperimentSpec::d.
inline ProblemInstance make_instance(const ExperimentSpec& spec, std::size_t trial) {
  spec.validate();
  auto matrix_rng = CounterRng::stream(spec.seed, trial, StreamTag::Matrix);
  auto truth_rng = CounterRng::stream(spec.seed, trial, StreamTag::Support);
  auto noise_rng = CounterRng::stream(spec.seed, trial, StreamTag::Noise);

  ProblemInstance inst;
  inst.a = spec.matrix_family == MatrixFamily::OversampledDCT
               ? gen_dct_matrix(spec.m, spec.n, spec.F, matrix_rng)
               : gen_gaussian_matrix(spec.m, spec.n, spec.normalize_cols, matrix_rng);
  Vector xg = gen_ground_truth(spec.n, spec.s, spec.matrix_family, spec.D, truth_rng);
  inst.b = matvec(inst.a, xg);
  if (spec.sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : inst.b) v += spec.sigma * normal(noise_rng);
  }
  inst.eps = spec.eps_rule.eps(spec.m);
  inst.d = spec.d;
  inst.ground_truth = std::move(xg);
  return inst;
}

// ------------------------------------------------------------------- metrics

/// ||x* - x_g||_2 / ||x_g||_2
inline double metric_rel_err(std::span<const double> x_star, std::span<const double> x_g) {
  const double gn = norm2(x_g);
  if (gn == 0.0) throw std::invalid_argument("metric_rel_err: ground truth must be nonzero");
  return distance(x_star, x_g) / gn;
}

/// ||x* - x_g||_2 / max(1, ||x_g||_2)
inline double metric_ree_err(std::span<const double> x_star, std::span<const double> x_g) {
  return distance(x_star, x_g) / std::max(1.0, norm2(x_g));
}

/// Recovery error ||x* - x_g||_2, the quantity tabulated as "MSE" against the
/// oracle benchmark.
inline double metric_mse(std::span<const double> x_star, std::span<const double> x_g) {
  return distance(x_star, x_g);
}

/// sigma^2 tr((A_S^T A_S)^{-1}) for the columns S of A.
inline double metric_oracle_mse(const DenseMatrix& a, std::span<const std::size_t> support, double sigma) {
  const std::size_t k = support.size();
  if (k == 0) return 0.0;
  DenseMatrix gram(k, k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t q = p; q < k; ++q) {
      double s = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, support[p]) * a(i, support[q]);
      gram(p, q) = s;
      gram(q, p) = s;
    }
  try {
    return sigma * sigma * Cholesky(gram).inverse_trace();
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string("metric_oracle_mse: restricted Gram matrix is rank deficient: ") + e.what());
  }
}

inline std::vector<std::size_t> support_of(std::span<const double> x) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) s.push_back(i);
  return s;
}

// ------------------------------------------------------------------- trials

struct TrialRecord {
  std::size_t trial_index = 0;
  std::uint64_t seed_used = 0;
  double rel_err = 0.0;
  double ree_err = 0.0;
  double mse = 0.0;
  double oracle_mse = std::numeric_limits<double>::quiet_NaN();
  bool success = false;
  std::size_t iterations = 0;
  double wall_time_ms = 0.0;
  std::string termination;
  double stationarity_residual = 0.0;
  double final_alpha = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

struct ExperimentSummary {
  std::size_t trials = 0;
  double success_rate = 0.0;
  MeanStd rel_err, ree_err, mse, oracle_mse, iterations;
};

struct ExperimentResult {
  std::vector<TrialRecord> records;
  ExperimentSummary summary;
  std::vector<SolverResult> solves;  // filled only when traces are requested
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

inline ExperimentSummary summarize(const std::vector<TrialRecord>& records) {
  ExperimentSummary s;
  s.trials = records.size();
  std::vector<double> rel, ree, mse, oracle, iters;
  std::size_t successes = 0;
  for (const auto& r : records) {
    rel.push_back(r.rel_err);
    ree.push_back(r.ree_err);
    mse.push_back(r.mse);
    if (!std::isnan(r.oracle_mse)) oracle.push_back(r.oracle_mse);
    iters.push_back(static_cast<double>(r.iterations));
    successes += r.success ? 1 : 0;
  }
  s.success_rate = records.empty() ? 0.0 : static_cast<double>(successes) / static_cast<double>(records.size());
  s.rel_err = mean_std(rel);
  s.ree_err = mean_std(ree);
  s.mse = mean_std(mse);
  s.oracle_mse = mean_std(oracle);
  s.iterations = mean_std(iters);
  return s;
}

inline SolverConfig solver_config_for(const ExperimentSpec& spec, double lipschitz) {
  SolverConfig cfg = spec.solver == SolverKind::PPGA
                         ? SolverConfig::ppga(lipschitz, spec.n)
                         : SolverConfig::line_search(lipschitz, spec.n,
                                                     spec.solver == SolverKind::PPGA_NL ? spec.window : 0);
  cfg.eta = spec.eta;
  cfg.a = spec.a;
  cfg.rel_tol = spec.rel_tol;
  cfg.max_iter = spec.effective_max_iter();
  if (spec.lambda_schedule_on) cfg.lambda_schedule = LambdaSchedule{};
  return cfg;
}

/// Starting point: l1-ADMM approximate solution, moved into the eps-tube when
/// spec.warm_start and eps call for it. A zero ADMM output falls back to A^+ b; points outside the ball
/// are scaled onto it.
inline Vector warm_start(const ProblemInstance& inst, const ExperimentSpec& spec) {
  Vector x = admm_l1_warm_start(inst.a, inst.b, spec.admm_weight, spec.effective_admm_iters(), spec.admm_rho);
  if (spec.uses_tube_start()) x = noisy_warm_start(inst, x);
  if (is_zero(x)) x = min_norm_lsq(inst.a, inst.b, 1e-10);
  const double xn = norm2(x);
  if (xn > inst.d)
    for (double& v : x) v *= inst.d / xn;
  return x;
}

struct TrialOutcome {
  TrialRecord record;
  std::optional<SolverResult> solve;
};

inline TrialOutcome run_trial(const ExperimentSpec& spec, std::size_t trial) {
  TrialOutcome out;
  TrialRecord& rec = out.record;
  rec.trial_index = trial;
  rec.seed_used = CounterRng::derive_key(spec.seed, trial, StreamTag::Matrix);
  const auto t0 = std::chrono::steady_clock::now();
  const ProblemInstance inst = make_instance(spec, trial);
  const Vector& xg = *inst.ground_truth;
  if (spec.sigma > 0.0) {
    try {
      rec.oracle_mse = metric_oracle_mse(inst.a, support_of(xg), spec.sigma);
    } catch (const std::runtime_error&) {
      rec.oracle_mse = std::numeric_limits<double>::quiet_NaN();
    }
  }
  Vector x_final;
  try {
    const Vector x0 = warm_start(inst, spec);
    const auto obj = PenaltyObjective::with_estimated_lipschitz(inst, spec.lambda0);
    const SolverConfig cfg = solver_config_for(spec, obj.lipschitz());
    SolverResult res = spec.solver == SolverKind::PPGA ? solve_ppga(obj, x0, cfg) : solve_ppga_ls(obj, x0, cfg);
    rec.iterations = res.iterations;
    rec.termination = std::string(to_string(res.termination));
    rec.stationarity_residual = res.stationarity_residual;
    rec.final_alpha = res.step_trace.empty() ? cfg.alpha_hi : res.step_trace.back();
    x_final = res.x_final;
    out.solve = std::move(res);
  } catch (const std::exception& e) {
    rec.termination = std::string("Error: ") + e.what();
    x_final.assign(spec.n, 0.0);
  }
  rec.rel_err = metric_rel_err(x_final, xg);
  rec.ree_err = metric_ree_err(x_final, xg);
  rec.mse = metric_mse(x_final, xg);
  rec.success = rec.rel_err <= spec.success_tol;
  rec.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Runs all trials, `threads` at a time. Results are ordered by trial index
/// and do not depend on the thread count.
inline ExperimentResult run_experiment(const ExperimentSpec& spec, std::size_t threads = 1, bool keep_solves = false) {
  spec.validate();
  std::vector<TrialOutcome> outcomes(spec.trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < spec.trials; t = next++) {
      outcomes[t] = run_trial(spec, t);
      if (!keep_solves) outcomes[t].solve.reset();
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, spec.trials);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  ExperimentResult result;
  for (auto& o : outcomes) {
    result.records.push_back(std::move(o.record));
    if (keep_solves) result.solves.push_back(o.solve ? std::move(*o.solve) : SolverResult{});
  }
  result.summary = summarize(result.records);
  return result;
}

/// lambda used for the noise-free DCT study, keyed by (D, s); F does not
/// change the choice. Returns nullopt where no value is prescribed.
inline std::optional<double> noise_free_lambda(double D, std::size_t s) {
  if (D == 1.0) return 0.001;
  if (D == 3.0) return 0.004;
  if (D == 5.0) {
    constexpr std::size_t sparsity[] = {2, 6, 10, 14, 18, 22};
    constexpr double lambdas[] = {0.004, 0.004, 0.1, 0.2, 0.5, 0.5};
    for (std::size_t i = 0; i < 6; ++i)
      if (sparsity[i] == s) return lambdas[i];
  }
  return std::nullopt;
}

}  // namespace l1l2

#endif  // L1L2_EXPERIMENTS_HPP
