#include <gtest/gtest.h>

#include <cmath>

#include "pacl2o/sampler.hpp"
#include "test_support.hpp"

using namespace pacl2o;

namespace {

ProbabilityEstimate fixed_estimate(double p) {
  ProbabilityEstimate e;
  e.point = p;
  e.conclusive = true;
  return e;
}

SublevelSpec open_band() {
  SublevelSpec s;
  s.p_lo = 0.0;
  s.p_hi = 1.0;
  return s;
}

}  // namespace

TEST(SgldStep, ZeroStepKeepsPoint) {
  Rng rng(1);
  Vec a(3);
  a << 1, 2, 3;
  EXPECT_EQ(sgld_step(a, Vec::Zero(3), 0.0, rng), a);
  EXPECT_THROW(sgld_step(a, Vec::Zero(2), 0.1, rng), std::invalid_argument);
  EXPECT_THROW(sgld_step(a, Vec::Zero(3), -0.1, rng), std::invalid_argument);
}

TEST(SgldStep, ReproducibleUnderSeed) {
  Rng r1(5), r2(5);
  const Vec a = Vec::Ones(4), g = Vec::Constant(4, 0.3);
  EXPECT_EQ(sgld_step(a, g, 0.01, r1), sgld_step(a, g, 0.01, r2));
}

TEST(SgldStep, MeanDriftIsHalfStepGradient) {
  Rng rng(8);
  const double step = 0.04;
  Vec g(2);
  g << 1.5, -3.0;
  Vec sum = Vec::Zero(2);
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += sgld_step(Vec::Zero(2), g, step, rng);
  const Vec mean = sum / n;
  const double stderr_ = std::sqrt(step / n);
  for (Index i = 0; i < 2; ++i) EXPECT_NEAR(mean[i], -0.5 * step * g[i], 4.0 * stderr_);
}

TEST(SgldStepSize, DecaysPolynomially) {
  SgldConfig cfg;
  cfg.step0 = 1.0;
  cfg.decay_offset = 10.0;
  cfg.decay_exponent = 0.5;
  EXPECT_DOUBLE_EQ(sgld_step_size(cfg, 0), 1.0);
  EXPECT_DOUBLE_EQ(sgld_step_size(cfg, 30), 0.5);
}

TEST(SgldConfig, Validation) {
  SgldConfig cfg;
  cfg.step0 = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.n_samples = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(ConstrainedSample, OpenBandAcceptsEverything) {
  SgldConfig cfg;
  cfg.step0 = 1e-2;
  cfg.n_samples = 15;
  cfg.thinning = 3;
  Rng rng(2);
  const SampleSet s = constrained_sample(
      Vec::Zero(2), fixed_estimate(1.0), [](const Vec& a, Rng&) { return Vec(a); },
      [](const Vec&, Rng&) { return fixed_estimate(0.5); }, open_band(), cfg, rng);
  EXPECT_EQ(s.points.size(), 15u);
  EXPECT_EQ(s.proposals, 45);
  EXPECT_EQ(s.accepted, 45);
}

TEST(ConstrainedSample, RejectedProposalsNeverEnterSamples) {
  // synthetic constraint set: the half-plane alpha_0 <= 0.05
  auto estimator = [](const Vec& a, Rng&) { return fixed_estimate(a[0] <= 0.05 ? 1.0 : 0.0); };
  SgldConfig cfg;
  cfg.step0 = 1e-2;
  cfg.decay_exponent = 0.0;
  cfg.n_samples = 200;
  cfg.thinning = 1;
  cfg.patience = 1000;
  const SublevelSpec spec;
  Rng rng(3);
  const SampleSet s = constrained_sample(Vec::Zero(2), fixed_estimate(1.0), [](const Vec& a, Rng&) { return Vec(0 * a); },
                                         estimator, spec, cfg, rng);
  ASSERT_EQ(s.points.size(), 200u);
  EXPECT_LT(s.accepted, s.proposals);
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    EXPECT_LE(s.points[i][0], 0.05);
    EXPECT_TRUE(s.estimates[i].satisfies(spec));
  }
}

TEST(ConstrainedSample, PatienceAborts) {
  SgldConfig cfg;
  cfg.patience = 5;
  Rng rng(1);
  EXPECT_THROW(constrained_sample(Vec::Zero(2), fixed_estimate(1.0), [](const Vec& a, Rng&) { return Vec(a); },
                                  [](const Vec&, Rng&) { return fixed_estimate(0.0); }, SublevelSpec{}, cfg, rng),
               std::runtime_error);
}

TEST(ConstrainedSample, UnconstrainedChainMatchesGibbsSecondMoment) {
  // U(a) = |a|^2 / 2, so the target is N(0, I) and E|a|^2 = dim
  const Index dim = 5;
  SgldConfig cfg;
  cfg.step0 = 0.05;
  cfg.decay_exponent = 0.0;
  cfg.n_samples = 100000;
  cfg.thinning = 1;
  Rng rng(2718);
  const SampleSet s = constrained_sample(
      Vec::Zero(dim), fixed_estimate(1.0), [](const Vec& a, Rng&) { return Vec(a); },
      [](const Vec&, Rng&) { return fixed_estimate(1.0); }, open_band(), cfg, rng);
  double m2 = 0.0;
  const std::size_t burn = 1000;
  for (std::size_t i = burn; i < s.points.size(); ++i) m2 += s.points[i].squaredNorm();
  m2 /= static_cast<double>(s.points.size() - burn);
  EXPECT_NEAR(m2, static_cast<double>(dim), 0.1 * dim);
}

TEST(ConstrainedSample, LearnedRuleChainStaysInBand) {
  auto pool = pacl2o::testing::quad_pool(40, 6, 2);
  std::span<const Problem> all(pool);
  LearnedQuadRule proto;
  // a hand-set rule that moves against the gradient
  Vec alpha = Vec::Zero(static_cast<Index>(proto.parameter_count()));
  {
    DenseNet dir = LearnedQuadRule::make_direction_net();
    DenseNet stp = LearnedQuadRule::make_step_net();
    for (std::size_t l = 0; l < dir.layer_count(); ++l) dir.weight(l)(0, 0) = 1.0;
    dir.weight(dir.layer_count() - 1)(0, 0) = -1.0;
    for (std::size_t l = 0; l < stp.layer_count(); ++l) stp.weight(l)(0, 0) = 1.0;
    stp.weight(stp.layer_count() - 1)(0, 0) = 0.01;
    dir.get_parameters({alpha.data(), dir.parameter_count()});
    stp.get_parameters({alpha.data() + dir.parameter_count(), stp.parameter_count()});
  }
  SamplerData data{PriorSet(all.subspan(0, 20)), ValSet(all.subspan(20)), Vec::Zero(2), 1, 20, 10};
  const SublevelSpec spec;
  proto.set_parameters(alpha);
  Rng rng(4);
  const ProbabilityEstimate start = estimate_sublevel_probability(proto, data.val, data.x0, data.horizon, spec, rng);
  ASSERT_TRUE(start.satisfies(spec));
  SgldConfig cfg;
  cfg.n_samples = 5;
  cfg.thinning = 2;
  const SampleSet s = constrained_sample(proto, alpha, start, data, spec, cfg, rng);
  ASSERT_EQ(s.points.size(), 5u);
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    EXPECT_TRUE(s.estimates[i].satisfies(spec));
    auto rule = proto.clone();
    rule->set_parameters(s.points[i]);
    Rng re(i);
    EXPECT_GE(estimate_sublevel_probability(*rule, data.val, data.x0, data.horizon, spec, re).point,
              spec.p_lo - spec.width_tol);
  }
}
