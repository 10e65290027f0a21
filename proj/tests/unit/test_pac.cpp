#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "oracles.hpp"
#include "pacl2o/pac.hpp"
#include "test_support.hpp"

using namespace pacl2o;
using pacl2o::testing::quad_problem;
using pacl2o::testing::rel_err;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DiscreteMeasure measure(std::vector<double> w) {
  DiscreteMeasure m;
  for (std::size_t i = 0; i < w.size(); ++i) {
    m.support_ids.push_back(i);
    m.log_weights.push_back(std::log(w[i]));
  }
  return m;
}

PacConfig small_grid(double eps = 0.05) {
  PacConfig c;
  c.confidence = eps;
  return c;
}

SampleSet samples_with(std::size_t n, Index dim, std::vector<double> p_hat) {
  SampleSet s;
  for (std::size_t i = 0; i < n; ++i) {
    s.points.push_back(Vec::Zero(dim));
    ProbabilityEstimate e;
    e.point = p_hat[i];
    s.estimates.push_back(e);
    s.accepted_flags.push_back(true);
  }
  return s;
}

}  // namespace

TEST(LogSumExp, StableAndEdgeCases) {
  const std::vector<double> big{1000.0, 1000.0};
  EXPECT_NEAR(log_sum_exp(big), 1000.0 + std::log(2.0), 1e-12);
  const std::vector<double> none{-kInf, -kInf};
  EXPECT_EQ(log_sum_exp(none), -kInf);
  EXPECT_EQ(log_sum_exp(std::vector<double>{}), -kInf);
}

TEST(Softmax, TwoPointAnalytic) {
  const std::vector<double> phi{0.0, std::log(3.0)};
  const DiscreteMeasure m = softmax_measure(phi);
  EXPECT_NEAR(m.weight(0), 0.25, 1e-15);
  EXPECT_NEAR(m.weight(1), 0.75, 1e-15);
}

TEST(Softmax, DropsExcludedAndNormalizes) {
  const std::vector<double> phi{-kInf, 2.0, -kInf, 2.0, 5.5};
  const DiscreteMeasure m = softmax_measure(phi);
  EXPECT_EQ(m.support_ids, (std::vector<std::size_t>{1, 3, 4}));
  double total = 0.0;
  for (double w : m.weights()) total += w;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(m.weight(0), m.weight(1));
  EXPECT_EQ(m.find(3), 1u);
  EXPECT_EQ(m.find(2), m.size());
}

TEST(Softmax, EqualPotentialsUniformSingletonOne) {
  const std::vector<double> eq{-4.0, -4.0, -4.0, -4.0};
  for (double w : softmax_measure(eq).weights()) EXPECT_NEAR(w, 0.25, 1e-15);
  const std::vector<double> one{-kInf, -123.0};
  EXPECT_EQ(softmax_measure(one).weight(0), 1.0);
}

TEST(Softmax, EmptySupportThrows) {
  const std::vector<double> phi{-kInf, -kInf};
  EXPECT_THROW(softmax_measure(phi), std::runtime_error);
  const std::vector<double> nan{std::nan("")};
  EXPECT_THROW(softmax_measure(nan), std::invalid_argument);
}

TEST(KappaTilde, Examples) {
  EXPECT_EQ(kappa_tilde(3.0, measure({1.0}), {{0.0}, {0.0}}), 0.0);
  const DiscreteMeasure two = measure({0.5, 0.5});
  EXPECT_NEAR(kappa_tilde(1.0, two, {{0, 0}, {0, 2}}), std::log(0.5 * (1.0 + std::exp(-1.0))), 1e-15);
  const SufficientStats st{{-0.3, -2.0, -0.1}, {0.5, 0.0, 3.0}};
  const DiscreteMeasure three = measure({0.2, 0.3, 0.5});
  for (double lam : {1e-3, 0.5, 4.0, 100.0}) EXPECT_LE(kappa_tilde(lam, three, st), lam * -0.1 + 1e-15);
}

TEST(KappaTilde, FiniteForLargeArguments) {
  const DiscreteMeasure two = measure({0.5, 0.5});
  EXPECT_TRUE(std::isfinite(kappa_tilde(1e4, two, {{-1.0, -0.9}, {0.0, 0.0}})));
  EXPECT_TRUE(std::isfinite(kappa_tilde(1.0, two, {{-1e4, 1e4}, {0.0, 0.0}})));
}

TEST(PacObjective, ZeroKappa) {
  PacConfig cfg;
  cfg.grid_size = 100;
  EXPECT_NEAR(pac_objective(2.0, measure({1.0}), {{0.0}, {0.0}}, cfg), std::log(2000.0) / 2.0, 1e-12);
  EXPECT_NEAR(std::log(2000.0) / 2.0, 3.80045, 1e-5);
  EXPECT_GT(pac_objective(1e-8, measure({1.0}), {{0.0}, {0.0}}, cfg), 1e8);
  EXPECT_THROW(pac_objective(0.0, measure({1.0}), {{0.0}, {0.0}}, cfg), std::invalid_argument);
}

TEST(PacObjective, SingletonClosedForm) {
  const double r = 0.7, v = 0.02;
  const PacConfig cfg = small_grid();
  const double c = cfg.log_k_over_eps();
  for (double lam : {0.1, 1.0, 30.0}) {
    EXPECT_NEAR(pac_objective(lam, measure({1.0}), {{-r}, {v}}, cfg), r + 0.5 * lam * v + c / lam, 1e-12);
  }
  const double lam_star = std::sqrt(2.0 * c / v);
  const double found = optimize_lambda(measure({1.0}), {{-r}, {v}}, cfg);
  const double cell = std::pow(cfg.lambda_max / cfg.lambda_min, 1.0 / (cfg.grid_size - 1));
  EXPECT_LE(std::max(found / lam_star, lam_star / found), cell);
}

TEST(OptimizeLambda, IncreasingObjectivePicksFirstPoint) {
  const PacConfig cfg = small_grid();
  EXPECT_EQ(optimize_lambda(measure({1.0}), {{-1.0}, {1e14}}, cfg), cfg.grid().front());
}

TEST(OptimizeLambda, Deterministic) {
  const SufficientStats st{{-0.3, -2.0}, {0.5, 0.1}};
  const DiscreteMeasure m = measure({0.4, 0.6});
  EXPECT_EQ(optimize_lambda(m, st, small_grid()), optimize_lambda(m, st, small_grid()));
}

TEST(PacConfig, GridIsLogUniformAndIncreasing) {
  PacConfig cfg;
  const auto g = cfg.grid();
  ASSERT_EQ(g.size(), 2000u);
  EXPECT_NEAR(g.front(), 1e-4, 1e-18);
  EXPECT_NEAR(g.back(), 1e4, 1e-8);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
  EXPECT_NEAR(std::log(g[1] / g[0]), std::log(g[2] / g[1]), 1e-12);
  cfg.confidence = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Posterior, SmallLambdaReturnsPrior) {
  const DiscreteMeasure p = measure({0.2, 0.3, 0.5});
  const DiscreteMeasure q = build_posterior(1e-12, p, {{-5, -1, -3}, {1, 2, 3}});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(q.weight(i), p.weight(i), 1e-10);
  EXPECT_EQ(q.support_ids, p.support_ids);
}

TEST(Posterior, ConcentratesOnLowRisk) {
  const DiscreteMeasure q = build_posterior(50.0, measure({1.0 / 3, 1.0 / 3, 1.0 / 3}), {{-5, -0.1, -3}, {0, 0, 0}});
  EXPECT_GT(q.weight(1), 1.0 - 1e-12);
  EXPECT_EQ(point_estimate(q), 1u);
}

TEST(KlDivergence, Examples) {
  const DiscreteMeasure p = measure({0.5, 0.5});
  EXPECT_EQ(kl_divergence(p, p), 0.0);
  DiscreteMeasure q;
  q.support_ids = {0, 1};
  q.log_weights = {0.0, -kInf};
  EXPECT_NEAR(kl_divergence(q, p), std::log(2.0), 1e-15);
  DiscreteMeasure outside;
  outside.support_ids = {7};
  outside.log_weights = {0.0};
  EXPECT_EQ(kl_divergence(outside, p), kInf);
}

TEST(PointEstimate, TieGoesToSmallestId) {
  DiscreteMeasure m;
  m.support_ids = {9, 4, 6};
  m.log_weights = {std::log(1.0 / 3), std::log(1.0 / 3), std::log(1.0 / 3)};
  EXPECT_EQ(point_estimate(m), 4u);
  const std::vector<double> phi{1.0, 3.0, 2.0};
  const std::vector<double> shifted{101.0, 103.0, 102.0};
  EXPECT_EQ(point_estimate(softmax_measure(phi)), point_estimate(softmax_measure(shifted)));
}

TEST(Certificate, SingletonClosedForm) {
  const double r = 1.3, v = 0.4;
  const PacConfig cfg = small_grid();
  const DiscreteMeasure p = measure({1.0});
  const SufficientStats st{{-r}, {v}};
  const double lam = optimize_lambda(p, st, cfg);
  const PacCertificate c = certify(lam, p, build_posterior(lam, p, st), st, cfg);
  const double closed = r + 0.5 * lam * v + cfg.log_k_over_eps() / lam;
  EXPECT_NEAR(c.bound, closed, 1e-12);
  EXPECT_NEAR(c.bound_explicit, closed, 1e-12);
  EXPECT_EQ(c.kl, 0.0);
  EXPECT_EQ(c.point_estimate, 0u);
  EXPECT_DOUBLE_EQ(c.emp_risk, r);
}

TEST(Certificate, ExplicitFormulaEqualsObjective) {
  Rng rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(u(rng) * 10);
    std::vector<double> phi(n);
    SufficientStats st;
    for (std::size_t i = 0; i < n; ++i) {
      phi[i] = 3.0 * u(rng);
      st.t1.push_back(-5.0 * u(rng));
      st.t2.push_back(0.5 * u(rng));
    }
    const DiscreteMeasure p = softmax_measure(phi);
    const PacConfig cfg = small_grid();
    const double lam = optimize_lambda(p, st, cfg);
    const PacCertificate c = certify(lam, p, build_posterior(lam, p, st), st, cfg);
    EXPECT_LE(rel_err(c.bound_explicit, c.bound), 1e-8);
    EXPECT_GE(c.bound, c.emp_risk);
  }
}

TEST(Certificate, TwoPointFixtureAgainstExtendedPrecision) {
  using Big = boost::multiprecision::cpp_bin_float_50;
  const std::vector<double> w{0.3, 0.7};
  const SufficientStats st{{-0.8, -1.9}, {0.05, 0.01}};
  const PacConfig cfg = small_grid();
  const DiscreteMeasure p = measure(w);
  const double lam = 7.25;
  const PacCertificate c = certify(lam, p, build_posterior(lam, p, st), st, cfg);

  Big f[2], z = 0;
  for (int i = 0; i < 2; ++i) {
    f[i] = Big(lam) * st.t1[i] - Big(lam) * lam / 2 * st.t2[i];
    z += Big(w[i]) * exp(f[i]);
  }
  const Big logk = log(Big(cfg.grid_size) / Big(cfg.confidence));
  const Big bound = -(log(z) - logk) / lam;
  Big risk = 0, kl = 0, qt2 = 0;
  for (int i = 0; i < 2; ++i) {
    const Big q = Big(w[i]) * exp(f[i]) / z;
    risk -= q * st.t1[i];
    qt2 += q * st.t2[i];
    kl += q * log(q / w[i]);
  }
  const Big expl = risk + (kl + logk + Big(lam) * lam / 2 * qt2) / lam;
  EXPECT_NEAR(c.bound, bound.convert_to<double>(), 1e-13);
  EXPECT_NEAR(c.bound_explicit, expl.convert_to<double>(), 1e-13);
  EXPECT_NEAR(c.kl, kl.convert_to<double>(), 1e-14);
}

TEST(DonskerVaradhan, GibbsAttainsLogMoment) {
  Rng rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 3;
    std::vector<double> w(n), phi(n);
    SufficientStats st;
    for (std::size_t i = 0; i < n; ++i) {
      phi[i] = 2.0 * u(rng);
      st.t1.push_back(-3.0 * u(rng));
      st.t2.push_back(u(rng));
    }
    const DiscreteMeasure p = softmax_measure(phi);
    const double lam = 0.1 + 5.0 * u(rng);
    const DiscreteMeasure q = build_posterior(lam, p, st);
    std::vector<double> f(n), pw = p.weights(), qw = q.weights();
    for (std::size_t i = 0; i < n; ++i) f[i] = lam * st.t1[i] - 0.5 * lam * lam * st.t2[i];
    const long double lhs = pacl2o::oracle::log_mgf(pw, f);
    const long double gibbs = pacl2o::oracle::dv_value(qw, pw, f);
    EXPECT_NEAR(static_cast<double>(lhs - gibbs), 0.0, 1e-10);
    EXPECT_NEAR(kappa_tilde(lam, p, st), static_cast<double>(lhs), 1e-12);
    long double best = -1e300L;
    pacl2o::oracle::for_each_simplex_point(static_cast<int>(n), 40, [&](const std::vector<double>& cand) {
      best = std::max(best, pacl2o::oracle::dv_value(cand, pw, f));
    });
    EXPECT_LE(static_cast<double>(best - gibbs), 1e-6);
  }
}

TEST(SublevelRisk, AllInsideWithUnitProbabilityIsMean) {
  LearnedQuadRule identity;
  auto pool = pacl2o::testing::quad_pool(5, 3, 2);
  double mean = 0.0;
  for (const auto& p : pool) mean += p.loss(Vec::Zero(2));
  mean /= 5.0;
  EXPECT_NEAR(empirical_sublevel_risk(identity, pool, 1.0, Vec::Zero(2), 3, SublevelSpec{}), mean, 1e-12);
  SublevelSpec none;
  none.g_scale = 0.5;
  EXPECT_EQ(empirical_sublevel_risk(identity, pool, 1.0, Vec::Zero(2), 3, none), 0.0);
  EXPECT_THROW(empirical_sublevel_risk(identity, pool, 0.0, Vec::Zero(2), 3, none), std::invalid_argument);
}

TEST(SublevelRisk, TwoInstanceHandCase) {
  // identity rule: final loss = initial loss; threshold g = 3 (constant)
  LearnedQuadRule identity;
  std::vector<Problem> two{quad_problem({1.0}, {2.0}), quad_problem({1.0}, {3.0})};  // losses 2 and 4.5
  SublevelSpec s;
  s.g_scale = 3.0;
  s.g_exponent = 0.0;
  EXPECT_NEAR(empirical_sublevel_risk(identity, two, 0.8, Vec::Zero(1), 2, s), (2.0 / 2.0) / 0.8, 1e-15);
}

TEST(PriorPotential, BandDecidesInclusion) {
  LearnedQuadRule identity;
  auto pool = pacl2o::testing::quad_pool(4, 3, 2);
  const SublevelSpec s;
  EXPECT_TRUE(std::isfinite(phi_prior(identity, PriorSet(pool), 0.97, Vec::Zero(2), 3, s)));
  EXPECT_EQ(phi_prior(identity, PriorSet(pool), 0.9, Vec::Zero(2), 3, s), -kInf);
}

TEST(BuildPrior, OutOfBandPointsDropped) {
  LearnedQuadRule proto;
  auto pool = pacl2o::testing::quad_pool(4, 3, 2);
  const SampleSet s = samples_with(3, static_cast<Index>(proto.parameter_count()), {0.97, 0.5, 0.99});
  const PriorBuild b = build_prior(s, proto, PriorSet(pool), Vec::Zero(2), 3, SublevelSpec{});
  EXPECT_EQ(b.measure.support_ids, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(b.potentials[1], -kInf);
}

TEST(BuildStats, ConstantThresholdAllInside) {
  LearnedQuadRule proto;
  auto pool = pacl2o::testing::quad_pool(8, 3, 2);
  const SampleSet s = samples_with(2, static_cast<Index>(proto.parameter_count()), {1.0, 1.0});
  const DiscreteMeasure prior = measure({0.5, 0.5});
  SublevelSpec spec;
  spec.g_scale = 1e6;
  spec.g_exponent = 0.0;
  const SufficientStats st = build_stats(prior, s, proto, TrainSet(pool), Vec::Zero(2), 3, spec);
  double mean = 0.0;
  for (const auto& p : pool) mean += p.loss(Vec::Zero(2));
  mean /= 8.0;
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(st.t2[i], 1e12 / 8.0, 1e-3);
    EXPECT_NEAR(st.t1[i], -mean, 1e-12);
  }
  spec.g_scale = 1e-9;
  const SufficientStats empty = build_stats(prior, s, proto, TrainSet(pool), Vec::Zero(2), 3, spec);
  EXPECT_EQ(empty.t2[0], 0.0);
  EXPECT_EQ(empty.t1[0], 0.0);
}

TEST(BuildStatsBounded, Examples) {
  LearnedQuadRule proto;
  std::vector<Problem> two{quad_problem({1.0}, {2.0}), quad_problem({1.0}, {3.0})};
  const SampleSet s = samples_with(2, static_cast<Index>(proto.parameter_count()), {1.0, 1.0});
  const DiscreteMeasure prior = measure({0.5, 0.5});
  const SufficientStats st = build_stats_bounded(prior, s, proto, TrainSet(two), Vec::Zero(1), 4,
                                                 BoundedStatsSpec{{0.0, 1.0}, 1.0, 6.0});
  EXPECT_EQ(st.t2[0], 0.0);
  EXPECT_DOUBLE_EQ(st.t2[1], 3.0);
  EXPECT_DOUBLE_EQ(st.t1[0], -(2.0 + 4.5) / 2.0);
  EXPECT_THROW(build_stats_bounded(prior, s, proto, TrainSet(two), Vec::Zero(1), 4, BoundedStatsSpec{{-1, 1}, 1, 1}),
               std::invalid_argument);
}

TEST(ExponentialMomentBound, HalfNormalMonteCarlo) {
  Rng rng(99);
  std::normal_distribution<double> n01(0.0, 1.0);
  const int n = 200000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = std::abs(n01(rng));
  const double ex = std::sqrt(2.0 / std::numbers::pi);
  for (double lam : {0.1, 1.0, 5.0}) {
    double s = 0.0, s2 = 0.0;
    for (double x : xs) {
      const double v = std::exp(-lam * (x - ex));
      s += v;
      s2 += v * v;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    EXPECT_LE(mean, std::exp(0.5 * lam * lam * 1.0) * (1.0 + 5.0 * se));
  }
}
