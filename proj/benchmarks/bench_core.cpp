#include <benchmark/benchmark.h>

#include <random>

#include "pacl2o/harness.hpp"

using namespace pacl2o;

static void BM_QuadStep(benchmark::State& state) {
  QuadraticClassConfig cfg;
  cfg.dim = static_cast<int>(state.range(0));
  const Problem p = Problem::quadratic(gen_quadratics(1, cfg, 1)[0]);
  LearnedQuadRule rule;
  Rng rng(2);
  rule.init_parameters(rng);
  IterState s = start_state(Vec::Ones(cfg.dim));
  for (auto _ : state) {
    benchmark::DoNotOptimize(rule.step(s, p).x.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_QuadStep)->RangeMultiplier(4)->Range(8, 512)->Complexity();

static void BM_QuadHypergradient(benchmark::State& state) {
  QuadraticClassConfig cfg;
  cfg.dim = static_cast<int>(state.range(0));
  const Problem p = Problem::quadratic(gen_quadratics(1, cfg, 1)[0]);
  LearnedQuadRule rule;
  Rng rng(2);
  rule.init_parameters(rng);
  const IterState s = start_state(Vec::Ones(cfg.dim));
  for (auto _ : state) {
    benchmark::DoNotOptimize(grad_train_loss_onestep(rule, p, s));
  }
}
BENCHMARK(BM_QuadHypergradient)->Arg(20)->Arg(200);

static void BM_LassoHypergradient(benchmark::State& state) {
  LassoClassConfig cfg;
  cfg.dim = static_cast<int>(state.range(0));
  cfg.rows = cfg.dim;
  const LassoData d = gen_lasso(1, cfg, 3);
  const auto ctx = std::make_shared<const LassoClassContext>(d.context);
  const Problem p = Problem::lasso(d.instances[0], ctx);
  LearnedLassoRule rule(1.0 / ctx->lipschitz);
  Rng rng(4);
  rule.init_parameters(rng);
  const IterState s = start_state(Vec::Constant(cfg.dim, 0.1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(grad_train_loss_onestep(rule, p, s));
  }
}
BENCHMARK(BM_LassoHypergradient)->Arg(40)->Arg(100);

static void BM_Fista(benchmark::State& state) {
  LassoClassConfig cfg;
  cfg.dim = static_cast<int>(state.range(0));
  cfg.rows = cfg.dim;
  const LassoData d = gen_lasso(1, cfg, 5);
  const auto ctx = std::make_shared<const LassoClassContext>(d.context);
  const Problem p = Problem::lasso(d.instances[0], ctx);
  for (auto _ : state) {
    benchmark::DoNotOptimize(final_loss(Fista(), p, Vec::Zero(cfg.dim), 100));
  }
}
BENCHMARK(BM_Fista)->Arg(40)->Arg(160);

static void BM_OptimizeLambda(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> phi(n);
  SufficientStats st;
  for (std::size_t i = 0; i < n; ++i) {
    phi[i] = u(rng);
    st.t1.push_back(-u(rng));
    st.t2.push_back(u(rng));
  }
  const DiscreteMeasure prior = softmax_measure(phi);
  const PacConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimize_lambda(prior, st, cfg));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_OptimizeLambda)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

static void BM_SequentialEstimate(benchmark::State& state) {
  const SublevelSpec spec;
  Rng rng(7);
  std::bernoulli_distribution coin(0.97);
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_probability([&] { return coin(rng); }, spec));
  }
}
BENCHMARK(BM_SequentialEstimate);

BENCHMARK_MAIN();
