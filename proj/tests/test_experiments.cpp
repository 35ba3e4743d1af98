#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <set>

#include "l1l2/experiments.hpp"

using namespace l1l2;

namespace {

double mutual_coherence(const DenseMatrix& a) {
  const DenseMatrix g = gram_cols(a);
  double mu = 0.0;
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      mu = std::max(mu, std::abs(g(i, j)) / std::sqrt(g(i, i) * g(j, j)));
  return mu;
}

// asymptotic Kolmogorov tail probability P(K > lambda)
double kolmogorov_p(double lambda) {
  double p = 0.0;
  for (int k = 1; k < 100; ++k) p += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.m = 32;
  spec.n = 128;
  spec.s = 3;
  spec.lambda0 = 0.001;
  spec.trials = 4;
  spec.seed = 11;
  return spec;
}

}  // namespace

TEST(DctMatrix, ZeroWeightsGiveConstantEntries) {
  const Vector w(16, 0.0);
  const DenseMatrix a = dct_matrix_from_weights(w, 40, 3.0);
  for (double v : a.data()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(DctMatrix, EntriesBounded) {
  CounterRng rng(1);
  const DenseMatrix a = gen_dct_matrix(64, 512, 5.0, rng);
  for (double v : a.data()) EXPECT_LE(std::abs(v), 1.0 / 8.0 + 1e-15);
}

TEST(DctMatrix, LargerFRaisesCoherence) {
  double mu1 = 0.0, mu20 = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CounterRng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector w(32);
    for (double& v : w) v = unif(rng);
    mu1 += mutual_coherence(dct_matrix_from_weights(w, 128, 1.0));
    mu20 += mutual_coherence(dct_matrix_from_weights(w, 128, 20.0));
  }
  EXPECT_GT(mu20 / 50.0, mu1 / 50.0);
}

TEST(GaussianMatrix, NormalizedColumns) {
  CounterRng rng(2);
  const DenseMatrix a = gen_gaussian_matrix(30, 50, true, rng);
  for (std::size_t j = 0; j < 50; ++j) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < 30; ++i) {
      mean += a(i, j);
      sq += a(i, j) * a(i, j);
    }
    EXPECT_NEAR(mean / 30.0, 0.0, 1e-12);
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-12);
  }
}

TEST(GaussianMatrix, EntriesPassKolmogorovSmirnov) {
  CounterRng rng(3);
  const DenseMatrix a = gen_gaussian_matrix(1, 10000, false, rng);
  std::vector<double> v(a.data().begin(), a.data().end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-v[i] / std::sqrt(2.0));
    stat = std::max({stat, cdf - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cdf});
  }
  EXPECT_GT(kolmogorov_p(std::sqrt(n) * stat), 1e-3) << "KS statistic " << stat;
}

TEST(GaussianMatrix, DeterministicPerSeed) {
  CounterRng r1(9), r2(9);
  EXPECT_EQ(gen_gaussian_matrix(7, 9, true, r1), gen_gaussian_matrix(7, 9, true, r2));
}

TEST(GroundTruth, ZeroDynamicRangeGivesUnitMagnitudes) {
  CounterRng rng(4);
  const Vector x = gen_ground_truth(100, 10, MatrixFamily::OversampledDCT, 0.0, rng);
  EXPECT_EQ(support_of(x).size(), 10u);
  for (double v : x)
    if (v != 0.0) { EXPECT_EQ(std::abs(v), 1.0); }
}

TEST(GroundTruth, DynamicRangeBounded) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CounterRng rng(seed);
    const Vector x = gen_ground_truth(200, 8, MatrixFamily::OversampledDCT, 3.0, rng);
    double lo = kInfinity, hi = 0.0;
    for (double v : x)
      if (v != 0.0) {
        lo = std::min(lo, std::abs(v));
        hi = std::max(hi, std::abs(v));
      }
    EXPECT_LE(hi / lo, 1e3 * (1.0 + 1e-12));
  }
}

TEST(GroundTruth, FullSupport) {
  CounterRng rng(5);
  const Vector x = gen_ground_truth(20, 20, MatrixFamily::Gaussian, 1.0, rng);
  EXPECT_EQ(support_of(x).size(), 20u);
}

TEST(GroundTruth, SupportIsSortedAndDistinct) {
  CounterRng rng(6);
  const auto s = sample_support(50, 20, rng);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 20u);
  EXPECT_THROW(sample_support(3, 4, rng), std::invalid_argument);
}

TEST(MakeInstance, NoiseFreeDataIsConsistent) {
  const ExperimentSpec spec = small_spec();
  const ProblemInstance inst = make_instance(spec, 0);
  EXPECT_EQ(inst.b, matvec(inst.a, *inst.ground_truth));
  const PenaltyObjective obj(inst, spec.lambda0, 1.0);
  EXPECT_EQ(envelope_value(obj, *inst.ground_truth), 0.0);
}

TEST(MakeInstance, ScaledEpsRule) {
  EXPECT_DOUBLE_EQ(EpsRule::scaled(3e-3).eps(64), 0.024);
  EXPECT_EQ(EpsRule::zero().eps(64), 0.0);
}

TEST(MakeInstance, TrialsDrawDistinctData) {
  ExperimentSpec spec = small_spec();
  spec.sigma = 0.01;
  std::set<Vector> seen;
  for (std::size_t t = 0; t < 100; ++t) seen.insert(make_instance(spec, t).b);
  EXPECT_EQ(seen.size(), 100u);
}

TEST(MakeInstance, RejectsInvalidSpecs) {
  ExperimentSpec spec = small_spec();
  spec.s = 0;
  EXPECT_THROW(make_instance(spec, 0), std::invalid_argument);
  spec = small_spec();
  spec.eta = 1.5;
  EXPECT_THROW(make_instance(spec, 0), std::invalid_argument);
  spec = small_spec();
  spec.m = 200;
  EXPECT_THROW(make_instance(spec, 0), std::invalid_argument);
}

TEST(Metrics, RelativeError) {
  const Vector xg{3.0, 0.0, -4.0};
  EXPECT_EQ(metric_rel_err(xg, xg), 0.0);
  EXPECT_DOUBLE_EQ(metric_rel_err(scaled(xg, 2.0), xg), 1.0);
  const Vector xs{2.5, 0.1, -3.0};
  const double d = std::sqrt(0.25 + 0.01 + 1.0);
  EXPECT_NEAR(metric_rel_err(xs, xg), d / 5.0, 1e-14);
  EXPECT_THROW(metric_rel_err(xs, Vector(3, 0.0)), std::invalid_argument);
}

TEST(Metrics, ReeError) {
  EXPECT_EQ(metric_ree_err(Vector{1.0, 0.0}, Vector{0.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(metric_ree_err(Vector{0.0, 2.5}, Vector{0.0, 2.0}), 0.25);
  const Vector xg{3.0, 0.0, -4.0}, xs{2.9, 0.2, -4.1};
  EXPECT_NEAR(metric_ree_err(xs, xg), metric_rel_err(xs, xg), 1e-14);
  EXPECT_DOUBLE_EQ(metric_mse(xs, xg), distance(xs, xg));
}

TEST(Metrics, OracleMseExamples) {
  // orthonormal columns: sigma^2 s
  const DenseMatrix id = DenseMatrix::identity(4);
  const std::vector<std::size_t> s3{0, 2, 3};
  EXPECT_NEAR(metric_oracle_mse(id, s3, 0.5), 0.25 * 3, 1e-15);
  const DenseMatrix col(1, 1, {2.0});
  const std::vector<std::size_t> s1{0};
  EXPECT_NEAR(metric_oracle_mse(col, s1, 0.3), 0.09 / 4.0, 1e-15);
}

TEST(Metrics, OracleMseMatchesEigenvalueOracle) {
  CounterRng rng(12);
  const DenseMatrix a = gen_gaussian_matrix(300, 130, true, rng);
  std::vector<std::size_t> support(130);
  for (std::size_t j = 0; j < 130; ++j) support[j] = j;
  const double got = metric_oracle_mse(a, support, 0.1);
  Eigen::MatrixXd e(300, 130);
  for (std::size_t i = 0; i < 300; ++i)
    for (std::size_t j = 0; j < 130; ++j) e(i, j) = a(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e.transpose() * e);
  const double oracle = 0.01 * es.eigenvalues().cwiseInverse().sum();
  EXPECT_NEAR(got, oracle, 1e-8);
}

TEST(Experiment, EasiestConfigurationSucceeds) {
  ExperimentSpec spec;
  spec.m = 64;
  spec.n = 256;
  spec.s = 1;
  spec.D = 0.0;
  spec.lambda0 = 0.001;
  const ExperimentResult r = run_experiment(spec);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_TRUE(r.records[0].success) << r.records[0].rel_err;
}

TEST(Experiment, SummaryMatchesRecords) {
  const ExperimentResult r = run_experiment(small_spec());
  double flags = 0.0;
  for (const auto& rec : r.records) {
    flags += rec.success ? 1.0 : 0.0;
    EXPECT_EQ(rec.success, rec.rel_err <= 1e-3);
    EXPECT_NE(rec.termination.rfind("Error", 0), 0u) << rec.termination;
  }
  EXPECT_DOUBLE_EQ(r.summary.success_rate, flags / static_cast<double>(r.records.size()));
  EXPECT_GE(r.summary.success_rate, 0.0);
  EXPECT_LE(r.summary.success_rate, 1.0);
}

TEST(Experiment, DeterministicAndThreadIndependent) {
  const ExperimentSpec spec = small_spec();
  const ExperimentResult a = run_experiment(spec, 1), b = run_experiment(spec, 3);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t t = 0; t < a.records.size(); ++t) {
    EXPECT_EQ(a.records[t].rel_err, b.records[t].rel_err);
    EXPECT_EQ(a.records[t].mse, b.records[t].mse);
    EXPECT_EQ(a.records[t].iterations, b.records[t].iterations);
    EXPECT_EQ(a.records[t].seed_used, b.records[t].seed_used);
  }
}

TEST(Experiment, AllSolversDecreaseOnDefaultConfiguration) {
  ExperimentSpec spec;  // m = 64, n = 1024, s = 5, lambda = 0.008, d = 1e7
  spec.seed = 5;
  for (SolverKind kind : {SolverKind::PPGA, SolverKind::PPGA_ML, SolverKind::PPGA_NL}) {
    spec.solver = kind;
    spec.max_iter = 3000;
    const ExperimentResult r = run_experiment(spec, 1, true);
    const auto& q = r.solves[0].objective_trace;
    ASSERT_GT(q.size(), 1u);
    for (std::size_t k = 0; k + 1 < q.size(); ++k) {
      if (kind == SolverKind::PPGA_NL) {
        const std::size_t lo = k >= spec.window ? k - spec.window : 0;
        EXPECT_LE(q[k + 1], *std::max_element(q.begin() + static_cast<std::ptrdiff_t>(lo),
                                              q.begin() + static_cast<std::ptrdiff_t>(k) + 1) + 1e-12);
      } else {
        EXPECT_LE(q[k + 1], q[k] + 1e-12) << to_string(kind) << " k " << k;
      }
    }
  }
}

TEST(Experiment, WarmStartRespectsBallAndTube) {
  ExperimentSpec spec = small_spec();
  spec.sigma = 0.01;
  spec.eps_rule = EpsRule::scaled(3e-3);
  const ProblemInstance inst = make_instance(spec, 0);
  const Vector x0 = warm_start(inst, spec);
  EXPECT_LE(distance(matvec(inst.a, x0), inst.b), inst.eps + 1e-8);
  spec.d = 1e-3;
  const ProblemInstance tight = make_instance(spec, 0);
  EXPECT_LE(norm2(warm_start(tight, spec)), 1e-3 * (1.0 + 1e-12));
}

TEST(NoiseFreeLambda, Table) {
  EXPECT_EQ(noise_free_lambda(1.0, 14), 0.001);
  EXPECT_EQ(noise_free_lambda(3.0, 2), 0.004);
  EXPECT_EQ(noise_free_lambda(5.0, 10), 0.1);
  EXPECT_EQ(noise_free_lambda(5.0, 22), 0.5);
  EXPECT_FALSE(noise_free_lambda(5.0, 7).has_value());
  EXPECT_FALSE(noise_free_lambda(2.0, 2).has_value());
}
