#include <gtest/gtest.h>

#include <random>

#include "l1l2/experiments.hpp"
#include "l1l2/prox_oracle.hpp"
#include "l1l2/solvers.hpp"

using namespace l1l2;

namespace {

ProblemInstance gaussian_instance(std::size_t m, std::size_t n, std::size_t s, double eps, std::uint64_t seed,
                                  double d = 1e7) {
  CounterRng rng(seed);
  ProblemInstance p;
  p.a = gen_gaussian_matrix(m, n, false, rng);
  const Vector xg = gen_ground_truth(n, s, MatrixFamily::Gaussian, 0.0, rng);
  p.b = matvec(p.a, xg);
  p.eps = eps;
  p.d = d;
  p.ground_truth = xg;
  return p;
}

Vector random_point(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::normal_distribution<double> normal;
  Vector x(n);
  for (double& v : x) v = normal(rng);
  return x;
}

}  // namespace

TEST(LambdaSchedule, HalvesEveryTenUntilFrozen) {
  const LambdaSchedule s;
  EXPECT_EQ(s.lambda_at(0.01, 0), 0.01);
  EXPECT_EQ(s.lambda_at(0.01, 9), 0.01);
  EXPECT_EQ(s.lambda_at(0.01, 10), 0.005);
  EXPECT_EQ(s.lambda_at(0.01, 499), 0.01 * std::ldexp(1.0, -49));
  EXPECT_EQ(s.lambda_at(0.01, 500), 0.01 * std::ldexp(1.0, -50));
  EXPECT_EQ(s.lambda_at(0.01, 10000), 0.01 * std::ldexp(1.0, -50));
}

TEST(PpgaStep, IdentityExampleMatchesOracle) {
  ProblemInstance p;
  p.a = DenseMatrix::identity(2);
  p.b = {1.0, 0.0};
  p.d = 10.0;
  const PenaltyObjective obj(p, 0.1, 1.0);
  const Vector x{1.0, 0.0};
  for (double alpha : {0.5, 0.9, 2.0}) {
    // grad h = 0, C = 0.1, gamma = 1, y = x; case I with z = (1 - beta, 0), rescaled to norm 1
    const Vector next = ppga_step(obj, x, alpha);
    EXPECT_NEAR(next[0], 1.0, 1e-15);
    EXPECT_EQ(next[1], 0.0);
    const ProxParams params{alpha * 0.1, 1.0, 10.0};
    EXPECT_NEAR(prox_objective(next, x, params), prox_objective(prox_oracle(x, params), x, params), 1e-9);
  }
}

TEST(PpgaStep, FixedPointIsReturned) {
  ProblemInstance p;
  p.a = DenseMatrix::identity(2);
  p.b = {1.0, 0.0};
  p.d = 10.0;
  const PenaltyObjective obj(p, 0.1, 1.0);
  const Vector x{1.0, 0.0};
  EXPECT_LE(stationarity_residual(obj, x, 0.5), 1e-15);
  const SolverResult res = solve_ppga(obj, x, SolverConfig::ppga(1.0, 2));
  EXPECT_EQ(res.iterations, 1u);
  EXPECT_EQ(res.termination, Termination::RelTol);
  EXPECT_EQ(res.x_final, x);
}

TEST(PpgaStep, RejectsInfeasiblePoints) {
  const PenaltyObjective obj = PenaltyObjective::with_estimated_lipschitz(gaussian_instance(4, 6, 2, 0.0, 1), 0.1);
  EXPECT_THROW(ppga_step(obj, Vector(6, 0.0), 0.1), std::domain_error);
  EXPECT_THROW(ppga_step(obj, Vector(6, 1e7), 0.1), std::domain_error);
  EXPECT_THROW(ppga_step(obj, Vector(6, 1.0), 0.0), std::invalid_argument);
}

TEST(PpgaStep, SingleStepDecreasesObjective) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto obj = PenaltyObjective::with_estimated_lipschitz(
        gaussian_instance(10, 25, 3, seed % 2 ? 0.1 : 0.0, 100 + seed), 0.05);
    const Vector x = random_point(25, 200 + seed);
    const double alpha = 0.999 / obj.lipschitz();
    const Vector next = ppga_step(obj, x, alpha);
    EXPECT_LE(q_lambda(obj, next), q_lambda(obj, x) + 1e-12) << seed;
  }
}

TEST(Ppga, PerStepInequalityHolds) {
  const auto obj = PenaltyObjective::with_estimated_lipschitz(gaussian_instance(20, 60, 4, 0.0, 7), 0.01);
  const double alpha = 0.999 / obj.lipschitz();
  const double coef = 1.0 / alpha - obj.lipschitz();
  Vector x = random_point(60, 8);
  for (int k = 0; k < 400; ++k) {
    const Vector next = ppga_step(obj, x, alpha);
    const double dx = distance(next, x);
    EXPECT_LE(q_lambda(obj, next) + coef / (2.0 * norm2(next)) * dx * dx, q_lambda(obj, x) + 1e-10) << k;
    x = next;
  }
}

TEST(Ppga, RecoversSmallPlantedSignal) {
  // m = 8 is near the recovery threshold for s = 2, so a fraction of draws
  // legitimately fail; assert a majority succeeds from the l1 warm start
  std::size_t successes = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ProblemInstance p = gaussian_instance(8, 32, 2, 0.0, 40 + seed);
    const auto obj = PenaltyObjective::with_estimated_lipschitz(p, 0.001);
    Vector x0 = admm_l1_warm_start(p.a, p.b, 0.08, 64);
    if (is_zero(x0)) x0 = min_norm_lsq(p.a, p.b);
    const SolverResult res = solve_ppga(obj, x0, SolverConfig::ppga(obj.lipschitz(), 32));
    EXPECT_LE(res.iterations, 500u * 32u);
    if (metric_rel_err(res.x_final, *p.ground_truth) <= 1e-3) ++successes;
  }
  EXPECT_GE(successes, 10u);
}

TEST(Ppga, TraceIsMonotoneAndBoundedBelowByLambda) {
  const ProblemInstance p = gaussian_instance(15, 40, 3, 0.05, 9);
  const auto obj = PenaltyObjective::with_estimated_lipschitz(p, 0.02);
  const SolverResult res = solve_ppga(obj, min_norm_lsq(p.a, p.b), SolverConfig::ppga(obj.lipschitz(), 40));
  for (std::size_t k = 0; k + 1 < res.objective_trace.size(); ++k)
    EXPECT_LE(res.objective_trace[k + 1], res.objective_trace[k] + 1e-12);
  for (double q : res.objective_trace) EXPECT_GE(q, 0.02 * (1.0 - 1e-12));
  EXPECT_FALSE(is_zero(res.x_final));
}

TEST(Ppga, RejectsStepAtOrAboveInverseLipschitz) {
  const auto obj = PenaltyObjective::with_estimated_lipschitz(gaussian_instance(5, 8, 2, 0.0, 3), 0.1);
  SolverConfig cfg = SolverConfig::ppga(obj.lipschitz(), 8);
  cfg.alpha_hi = cfg.alpha_lo = 1.0 / obj.lipschitz();
  EXPECT_THROW(solve_ppga(obj, random_point(8, 1), cfg), std::invalid_argument);
}

TEST(BacktrackBound, Examples) {
  // alpha (a M + L) = 1: ceil(0 + 1)
  EXPECT_EQ(backtrack_bound(1.0, 0.0, 1.0, 1.0, 0.5), 1u);
  // alpha_hi = 10 / L, a M = 0.1, L = 1: ceil(log2(11) + 1) = 5
  EXPECT_EQ(backtrack_bound(10.0, 1e-8, 1e7, 1.0, 0.5), 5u);
  // tiny steps need no backtracking
  EXPECT_EQ(backtrack_bound(1e-3, 0.0, 1.0, 1.0, 0.5), 0u);
}

class LineSearch : public ::testing::TestWithParam<std::size_t> {};

TEST_P(LineSearch, AcceptanceAndStepInvariants) {
  const std::size_t window = GetParam();
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const ProblemInstance p = gaussian_instance(20, 80, 4, seed % 2 ? 0.05 : 0.0, 500 + seed);
    const auto obj = PenaltyObjective::with_estimated_lipschitz(p, 0.01);
    const SolverConfig cfg = SolverConfig::line_search(obj.lipschitz(), 80, window);
    const SolverResult res = solve_ppga_ls(obj, min_norm_lsq(p.a, p.b), cfg);
    ASSERT_NE(res.termination, Termination::LineSearchFail);
    const std::size_t t = backtrack_bound(cfg.alpha_hi, cfg.a, p.d, obj.lipschitz(), cfg.eta);
    const auto& q = res.objective_trace;
    for (std::size_t k = 0; k + 1 < q.size(); ++k) {
      const std::size_t lo = k >= window ? k - window : 0;
      const double ref = *std::max_element(q.begin() + static_cast<std::ptrdiff_t>(lo), q.begin() + static_cast<std::ptrdiff_t>(k) + 1);
      EXPECT_LE(q[k + 1], ref + 1e-12);
      EXPECT_LE(res.backtrack_trace[k], t);
      EXPECT_LE(res.step_trace[k], cfg.alpha_hi);
      EXPECT_GE(res.step_trace[k], cfg.alpha_lo * std::pow(cfg.eta, static_cast<double>(t)));
      EXPECT_GE(q[k + 1], 0.01 * (1.0 - 1e-12));
    }
    EXPECT_TRUE(inside_ball(res.x_final, p.d));
    EXPECT_FALSE(is_zero(res.x_final));
  }
}

INSTANTIATE_TEST_SUITE_P(Windows, LineSearch, ::testing::Values(0u, 4u));

TEST(LineSearch, FirstTrialUsesUpperStep) {
  const ProblemInstance p = gaussian_instance(10, 30, 2, 0.0, 61);
  const auto obj = PenaltyObjective::with_estimated_lipschitz(p, 0.01);
  SolverConfig cfg = SolverConfig::line_search(obj.lipschitz(), 30, 0);
  cfg.max_iter = 1;
  const SolverResult res = solve_ppga_ls(obj, min_norm_lsq(p.a, p.b), cfg);
  ASSERT_EQ(res.step_trace.size(), 1u);
  EXPECT_EQ(res.step_trace[0], cfg.alpha_hi * std::pow(cfg.eta, static_cast<double>(res.backtrack_trace[0])));
}

TEST(LineSearch, CapExhaustionReportsFailure) {
  const ProblemInstance p = gaussian_instance(10, 30, 2, 0.0, 62);
  const auto obj = PenaltyObjective::with_estimated_lipschitz(p, 0.01);
  SolverConfig cfg = SolverConfig::line_search(obj.lipschitz(), 30, 0);
  cfg.a = 1e12;  // no step can satisfy the sufficient-decrease test
  cfg.backtrack_cap = 3;
  const SolverResult res = solve_ppga_ls(obj, min_norm_lsq(p.a, p.b), cfg);
  EXPECT_EQ(res.termination, Termination::LineSearchFail);
  EXPECT_EQ(res.iterations, 1u);
}

TEST(LineSearch, NonmonotoneBeatsFixedStepOnDctConfiguration) {
  ExperimentSpec spec;
  spec.m = 64;
  spec.n = 1024;
  spec.s = 5;
  spec.lambda0 = 0.008;
  spec.seed = 3;
  const ProblemInstance inst = make_instance(spec, 0);
  const Vector x0 = warm_start(inst, spec);
  const auto obj = PenaltyObjective::with_estimated_lipschitz(inst, spec.lambda0);
  const SolverResult nl = solve_ppga_ls(obj, x0, SolverConfig::line_search(obj.lipschitz(), spec.n, 4));
  const SolverResult fixed = solve_ppga(obj, x0, SolverConfig::ppga(obj.lipschitz(), spec.n));
  EXPECT_EQ(nl.termination, Termination::RelTol);
  EXPECT_LT(nl.iterations, fixed.iterations);
}

TEST(LineSearch, ScheduleResetsWindowAndTracksLambda) {
  const ProblemInstance p = gaussian_instance(20, 60, 4, 0.02, 63);
  const auto obj = PenaltyObjective::with_estimated_lipschitz(p, 0.01);
  SolverConfig cfg = SolverConfig::line_search(obj.lipschitz(), 60, 0);
  cfg.lambda_schedule = LambdaSchedule{};
  cfg.rel_tol = 0.0;
  cfg.max_iter = 60;
  const SolverResult res = solve_ppga_ls(obj, min_norm_lsq(p.a, p.b), cfg);
  for (std::size_t k = 0; k < res.lambda_trace.size(); ++k)
    EXPECT_EQ(res.lambda_trace[k], cfg.lambda_schedule->lambda_at(0.01, k));
  // within a constant-lambda stretch the monotone variant still decreases
  for (std::size_t k = 1; k < res.step_trace.size(); ++k)
    if (res.lambda_trace[k] == res.lambda_trace[k - 1]) {
      EXPECT_LE(res.objective_trace[k + 1], res.objective_trace[k] + 1e-12);
    }
}

TEST(Stationarity, SolverOutputIsNearlyStationary) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ProblemInstance p = gaussian_instance(12, 40, 3, 0.0, 70 + seed);
    const auto obj = PenaltyObjective::with_estimated_lipschitz(p, 0.01);
    const SolverConfig cfg = SolverConfig::line_search(obj.lipschitz(), 40, 4);
    const SolverResult res = solve_ppga_ls(obj, min_norm_lsq(p.a, p.b), cfg);
    ASSERT_EQ(res.termination, Termination::RelTol);
    EXPECT_LE(res.stationarity_residual, 1e-6) << seed;
    EXPECT_GT(stationarity_residual(obj, random_point(40, 90 + seed), 0.5 / obj.lipschitz()), 0.0);
  }
}

TEST(Ppga, StepLengthsAreSummable) {
  const ProblemInstance p = gaussian_instance(15, 50, 3, 0.0, 77);
  const auto obj = PenaltyObjective::with_estimated_lipschitz(p, 0.01);
  const double alpha = 0.999 / obj.lipschitz();
  // protocol start; from A^+ b the run first drifts slowly across supports
  Vector x = admm_l1_warm_start(p.a, p.b, 0.08, 100);
  std::vector<double> steps;
  for (int k = 0; k < 200000; ++k) {
    const Vector next = ppga_step(obj, x, alpha);
    steps.push_back(distance(next, x));
    const bool done = steps.back() <= 1e-8 * norm2(x);
    x = next;
    if (done) break;
  }
  ASSERT_LT(steps.size(), 200000u);
  double total = 0.0, tail = 0.0;
  for (double s : steps) total += s;
  for (std::size_t k = steps.size() - steps.size() / 10; k < steps.size(); ++k) tail += steps[k];
  EXPECT_TRUE(std::isfinite(total));
  EXPECT_LE(tail, 0.01 * total);
}

TEST(Admm, IdentityDesignGivesSoftThreshold) {
  const Vector b{2.0, -0.05, 0.5, -3.0};
  const Vector z = admm_l1_warm_start(DenseMatrix::identity(4), b, 0.1, 500);
  const Vector expect = soft_threshold(b, 0.1);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(z[i], expect[i], 1e-10);
}

TEST(Admm, ZeroDataGivesZero) {
  CounterRng rng(5);
  const DenseMatrix a = gen_gaussian_matrix(6, 12, false, rng);
  EXPECT_TRUE(is_zero(admm_l1_warm_start(a, Vector(6, 0.0), 0.08, 3)));
}

TEST(Admm, TallAndWideAgree) {
  // the two linear-solve paths minimize the same objective
  CounterRng rng(6);
  const DenseMatrix wide = gen_gaussian_matrix(5, 8, false, rng);
  DenseMatrix tall(8, 8);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 8; ++j) tall(i, j) = wide(i, j);
  const Vector b = random_point(5, 7);
  Vector b_tall(8, 0.0);
  std::copy(b.begin(), b.end(), b_tall.begin());
  const Vector zw = admm_l1_warm_start(wide, b, 0.1, 300), zt = admm_l1_warm_start(tall, b_tall, 0.1, 300);
  for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(zw[j], zt[j], 1e-9);
}

TEST(Admm, DctWarmStartFitsData) {
  ExperimentSpec spec;
  const ProblemInstance inst = make_instance(spec, 0);
  const Vector z = admm_l1_warm_start(inst.a, inst.b, 0.08, 2 * spec.n);
  Vector r = matvec(inst.a, z);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= inst.b[i];
  EXPECT_LT(norm2(r), norm2(inst.b));
}

TEST(NoisyWarmStart, InsideTubeUnchanged) {
  ProblemInstance p = gaussian_instance(6, 12, 2, 0.0, 80);
  p.eps = 0.5;
  const Vector x = *p.ground_truth;  // zero residual
  EXPECT_EQ(noisy_warm_start(p, x), x);
}

TEST(NoisyWarmStart, ZeroEpsGivesPseudoinverse) {
  const ProblemInstance p = gaussian_instance(6, 12, 2, 0.0, 81);
  const Vector x = noisy_warm_start(p, random_point(12, 82));
  const Vector pinv = min_norm_lsq(p.a, p.b);
  for (std::size_t j = 0; j < 12; ++j) EXPECT_NEAR(x[j], pinv[j], 1e-12);
}

TEST(NoisyWarmStart, LandsOnTubeBoundary) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ProblemInstance p = gaussian_instance(10, 30, 3, 0.0, 90 + seed);
    p.eps = 0.1 * norm2(p.b);
    const Vector x_l1 = random_point(30, 300 + seed);
    ASSERT_GT(distance(matvec(p.a, x_l1), p.b), p.eps);
    const Vector x0 = noisy_warm_start(p, x_l1);
    EXPECT_LE(distance(matvec(p.a, x0), p.b), p.eps + 1e-8) << seed;
  }
}
