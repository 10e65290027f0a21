#include "pacl2o/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace pacl2o {

namespace {

template <typename T>
void read_opt(const Json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename F>
auto run_stage(Stage stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const ConstraintNotFound&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (arch == Architecture::quadratic) {
    quadratic.validate();
  } else {
    lasso.validate();
  }
  sublevel.validate();
  sgld.validate();
  pac.validate();
  if (n_train < 1) throw std::invalid_argument("config: n_train must be >= 1");
  if (n_eval < n_train) throw std::invalid_argument("config: n_eval must be >= n_train");
  if (splits.prior == 0 || splits.train == 0 || splits.val == 0 || splits.test == 0) {
    throw std::invalid_argument("config: every split needs at least one instance");
  }
  if (histogram_bins < 1) throw std::invalid_argument("config: histogram_bins must be >= 1");
  if (imitation_reference != "plain" && imitation_reference != "baseline") {
    throw std::invalid_argument("config: imitation_reference must be \"plain\" or \"baseline\"");
  }
  if (timing_repeats < 1) throw std::invalid_argument("config: timing_repeats must be >= 1");
}

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  if (j.contains("problem")) c.arch = architecture_from_string(j.at("problem").get<std::string>());
  if (j.contains("quadratic")) {
    const Json& q = j.at("quadratic");
    read_opt(q, "dim", c.quadratic.dim);
    read_opt(q, "m_lo", c.quadratic.m_lo);
    read_opt(q, "m_hi", c.quadratic.m_hi);
    read_opt(q, "L_lo", c.quadratic.L_lo);
    read_opt(q, "L_hi", c.quadratic.L_hi);
  }
  if (j.contains("lasso")) {
    const Json& l = j.at("lasso");
    read_opt(l, "dim", c.lasso.dim);
    read_opt(l, "rows", c.lasso.rows);
    read_opt(l, "reg_lo", c.lasso.reg_lo);
    read_opt(l, "reg_hi", c.lasso.reg_hi);
  }
  if (j.contains("splits")) {
    const Json& s = j.at("splits");
    read_opt(s, "prior", c.splits.prior);
    read_opt(s, "train", c.splits.train);
    read_opt(s, "val", c.splits.val);
    read_opt(s, "test", c.splits.test);
  }
  read_opt(j, "n_train", c.n_train);
  read_opt(j, "n_eval", c.n_eval);
  read_opt(j, "imitation", c.imitation);
  read_opt(j, "imitation_reference", c.imitation_reference);
  if (j.contains("init")) {
    const Json& s = j.at("init");
    read_opt(s, "lr", c.init.adam.lr);
    read_opt(s, "decay_every", c.init.decay_every);
    read_opt(s, "window", c.init.window);
    read_opt(s, "tolerance", c.init.tolerance);
    read_opt(s, "max_iters", c.init.max_iters);
    read_opt(s, "segment_len", c.init.segment_len);
    read_opt(s, "target_len", c.init.target_len);
  }
  if (j.contains("locate")) {
    const Json& s = j.at("locate");
    read_opt(s, "lr", c.locate.adam.lr);
    read_opt(s, "decay_every", c.locate.decay_every);
    read_opt(s, "n_max", c.locate.n_max);
    read_opt(s, "segment_len", c.locate.segment_len);
    read_opt(s, "target_len", c.locate.target_len);
    read_opt(s, "check_every", c.locate.check_every);
  }
  if (j.contains("sgld")) {
    const Json& s = j.at("sgld");
    read_opt(s, "step0", c.sgld.step0);
    read_opt(s, "decay_offset", c.sgld.decay_offset);
    read_opt(s, "decay_exponent", c.sgld.decay_exponent);
    read_opt(s, "n_samples", c.sgld.n_samples);
    read_opt(s, "thinning", c.sgld.thinning);
    read_opt(s, "patience", c.sgld.patience);
  }
  if (j.contains("sublevel")) {
    const Json& s = j.at("sublevel");
    read_opt(s, "g_scale", c.sublevel.g_scale);
    read_opt(s, "g_exponent", c.sublevel.g_exponent);
    read_opt(s, "p_lo", c.sublevel.p_lo);
    read_opt(s, "p_hi", c.sublevel.p_hi);
    read_opt(s, "q_lo", c.sublevel.q_lo);
    read_opt(s, "q_hi", c.sublevel.q_hi);
    read_opt(s, "width_tol", c.sublevel.width_tol);
    read_opt(s, "max_draws", c.sublevel.max_draws);
  }
  if (j.contains("pac")) {
    const Json& s = j.at("pac");
    read_opt(s, "lambda_min", c.pac.lambda_min);
    read_opt(s, "lambda_max", c.pac.lambda_max);
    read_opt(s, "grid_size", c.pac.grid_size);
    read_opt(s, "confidence", c.pac.confidence);
  }
  read_opt(j, "time_thresholds", c.time_thresholds);
  read_opt(j, "histogram_bins", c.histogram_bins);
  read_opt(j, "timing_repeats", c.timing_repeats);
  read_opt(j, "seed", c.seed);
  c.locate.horizon = c.n_train;
  c.validate();
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  return Json{
      {"problem", to_string(c.arch)},
      {"quadratic",
       {{"dim", c.quadratic.dim},
        {"m_lo", c.quadratic.m_lo},
        {"m_hi", c.quadratic.m_hi},
        {"L_lo", c.quadratic.L_lo},
        {"L_hi", c.quadratic.L_hi}}},
      {"lasso",
       {{"dim", c.lasso.dim}, {"rows", c.lasso.rows}, {"reg_lo", c.lasso.reg_lo}, {"reg_hi", c.lasso.reg_hi}}},
      {"splits",
       {{"prior", c.splits.prior}, {"train", c.splits.train}, {"val", c.splits.val}, {"test", c.splits.test}}},
      {"n_train", c.n_train},
      {"n_eval", c.n_eval},
      {"imitation", c.imitation},
      {"imitation_reference", c.imitation_reference},
      {"init",
       {{"lr", c.init.adam.lr},
        {"decay_every", c.init.decay_every},
        {"window", c.init.window},
        {"tolerance", c.init.tolerance},
        {"max_iters", c.init.max_iters},
        {"segment_len", c.init.segment_len},
        {"target_len", c.init.target_len}}},
      {"locate",
       {{"lr", c.locate.adam.lr},
        {"decay_every", c.locate.decay_every},
        {"n_max", c.locate.n_max},
        {"segment_len", c.locate.segment_len},
        {"target_len", c.locate.target_len},
        {"check_every", c.locate.check_every}}},
      {"sgld",
       {{"step0", c.sgld.step0},
        {"decay_offset", c.sgld.decay_offset},
        {"decay_exponent", c.sgld.decay_exponent},
        {"n_samples", c.sgld.n_samples},
        {"thinning", c.sgld.thinning},
        {"patience", c.sgld.patience}}},
      {"sublevel",
       {{"g_scale", c.sublevel.g_scale},
        {"g_exponent", c.sublevel.g_exponent},
        {"p_lo", c.sublevel.p_lo},
        {"p_hi", c.sublevel.p_hi},
        {"q_lo", c.sublevel.q_lo},
        {"q_hi", c.sublevel.q_hi},
        {"width_tol", c.sublevel.width_tol},
        {"max_draws", c.sublevel.max_draws}}},
      {"pac",
       {{"lambda_min", c.pac.lambda_min},
        {"lambda_max", c.pac.lambda_max},
        {"grid_size", c.pac.grid_size},
        {"confidence", c.pac.confidence}}},
      {"time_thresholds", c.time_thresholds},
      {"histogram_bins", c.histogram_bins},
      {"timing_repeats", c.timing_repeats},
      {"seed", c.seed},
  };
}

std::string config_hash(const ExperimentConfig& cfg) { return fnv1a_hex(config_to_json(cfg).dump()); }

std::string to_string(Stage s) {
  switch (s) {
    case Stage::data: return "gen-data";
    case Stage::init: return "init";
    case Stage::locate: return "locate-prior";
    case Stage::sample: return "sample-prior";
    case Stage::posterior: return "posterior";
    case Stage::evaluate: return "evaluate";
  }
  return "unknown";
}

Rng stage_rng(std::uint64_t seed, Stage stage) {
  // Streams below 2^40 belong to the instance generators.
  return make_rng(seed, (std::uint64_t{1} << 40) + static_cast<std::uint64_t>(stage));
}

StageError::StageError(Stage stage, const std::string& what)
    : std::runtime_error(to_string(stage) + ": " + what), stage_(stage) {}

Dataset dataset_from_problems(std::vector<Problem> all, const ExperimentConfig& cfg) {
  Dataset d;
  d.all = std::move(all);
  d.split = split_dataset(d.all, cfg.splits);
  return d;
}

Dataset generate_dataset(const ExperimentConfig& cfg) {
  const std::size_t total = cfg.splits.total();
  std::vector<Problem> all;
  all.reserve(total);
  if (cfg.arch == Architecture::quadratic) {
    for (auto& inst : gen_quadratics(total, cfg.quadratic, cfg.seed)) all.push_back(Problem::quadratic(std::move(inst)));
  } else {
    LassoData ld = gen_lasso(total, cfg.lasso, cfg.seed);
    auto ctx = std::make_shared<const LassoClassContext>(std::move(ld.context));
    for (auto& inst : ld.instances) all.push_back(Problem::lasso(std::move(inst), ctx));
  }
  return dataset_from_problems(std::move(all), cfg);
}

Vec initial_point(const ExperimentConfig& cfg) {
  return Vec::Zero(cfg.arch == Architecture::quadratic ? cfg.quadratic.dim : cfg.lasso.dim);
}

std::unique_ptr<LearnedRule> make_rule(const ExperimentConfig& cfg, const Dataset& data) {
  if (cfg.arch == Architecture::quadratic) return make_learned_rule(Architecture::quadratic);
  if (data.all.empty()) throw std::invalid_argument("make_rule: empty dataset");
  return make_learned_rule(Architecture::lasso, 1.0 / data.all.front().context().lipschitz);
}

std::unique_ptr<UpdateRule> make_baseline(const ExperimentConfig& cfg) {
  if (cfg.arch == Architecture::quadratic) {
    return std::make_unique<HeavyBall>(hbf_params(cfg.quadratic.m_lo, cfg.quadratic.L_hi));
  }
  return std::make_unique<Fista>();
}

std::unique_ptr<UpdateRule> make_reference(const ExperimentConfig& cfg) {
  if (cfg.imitation_reference == "baseline") return make_baseline(cfg);
  if (cfg.arch == Architecture::quadratic) return std::make_unique<GradientDescent>(1.0 / cfg.quadratic.L_hi);
  return std::make_unique<Ista>();
}

InitResult stage_init(const ExperimentConfig& cfg, const Dataset& data) {
  return run_stage(Stage::init, [&] {
    Rng rng = stage_rng(cfg.seed, Stage::init);
    auto rule = make_rule(cfg, data);
    rule->init_parameters(rng);
    if (!cfg.imitation) return InitResult{rule->parameters(), true, 0.0, 0};
    auto reference = make_reference(cfg);
    return find_initialization(*rule, *reference, data.split.prior_set(), initial_point(cfg), cfg.init, rng);
  });
}

PriorLocation stage_locate(const ExperimentConfig& cfg, const Dataset& data, const Vec& alpha_init) {
  PriorLocation loc = run_stage(Stage::locate, [&] {
    Rng rng = stage_rng(cfg.seed, Stage::locate);
    auto rule = make_rule(cfg, data);
    rule->set_parameters(alpha_init);
    LocateConfig lc = cfg.locate;
    lc.horizon = cfg.n_train;
    return locate_prior(*rule, data.split.prior_set(), data.split.val_set(), initial_point(cfg), cfg.sublevel, lc,
                        rng);
  });
  if (!loc.constraint_found) {
    throw ConstraintNotFound("locate-prior: no hyperparameter with sublevel probability in [" +
                             fmt(cfg.sublevel.p_lo) + ", " + fmt(cfg.sublevel.p_hi) + "] found (last estimate " +
                             fmt(loc.estimate.point) + ")");
  }
  return loc;
}

SampleSet stage_sample(const ExperimentConfig& cfg, const Dataset& data, const PriorLocation& location) {
  return run_stage(Stage::sample, [&] {
    Rng rng = stage_rng(cfg.seed, Stage::sample);
    auto rule = make_rule(cfg, data);
    SamplerData sd{data.split.prior_set(), data.split.val_set(), initial_point(cfg), cfg.locate.segment_len,
                   cfg.locate.target_len, cfg.n_train};
    return constrained_sample(*rule, location.alpha, location.estimate, sd, cfg.sublevel, cfg.sgld, rng);
  });
}

PosteriorResult stage_posterior(const ExperimentConfig& cfg, const Dataset& data, const SampleSet& samples) {
  return run_stage(Stage::posterior, [&] {
    auto rule = make_rule(cfg, data);
    const Vec x0 = initial_point(cfg);
    PosteriorResult out;
    out.prior = build_prior(samples, *rule, data.split.prior_set(), x0, cfg.n_train, cfg.sublevel);
    out.stats = build_stats(out.prior.measure, samples, *rule, data.split.train_set(), x0, cfg.n_train, cfg.sublevel);
    const double lambda = optimize_lambda(out.prior.measure, out.stats, cfg.pac);
    const DiscreteMeasure q = build_posterior(lambda, out.prior.measure, out.stats);
    out.certificate = certify(lambda, out.prior.measure, q, out.stats, cfg.pac);
    return out;
  });
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: no values");
  std::sort(values.begin(), values.end(), [](double a, double b) {
    if (std::isnan(a)) return false;
    if (std::isnan(b)) return true;
    return a < b;
  });
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

Percentiles loss_percentiles(const std::vector<std::vector<double>>& runs) {
  if (runs.empty()) throw std::invalid_argument("loss_percentiles: no runs");
  const std::size_t len = runs.front().size();
  Percentiles p;
  std::vector<double> col(runs.size());
  for (std::size_t k = 0; k < len; ++k) {
    for (std::size_t r = 0; r < runs.size(); ++r) col[r] = runs[r].at(k);
    p.p10.push_back(percentile(col, 0.1));
    p.p50.push_back(percentile(col, 0.5));
    p.p90.push_back(percentile(col, 0.9));
    p.mean.push_back(std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size()));
  }
  return p;
}

Histogram make_histogram(const std::vector<double>& values, int bins) {
  if (bins < 1) throw std::invalid_argument("make_histogram: bins must be >= 1");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  if (hi == lo) hi = lo + 1.0;
  Histogram h;
  for (int i = 0; i <= bins; ++i) h.edges.push_back(lo + (hi - lo) * i / bins);
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    int b = bins - 1;
    if (std::isfinite(v)) b = std::min(bins - 1, static_cast<int>((v - lo) / (hi - lo) * bins));
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

namespace {

// Cumulative seconds until each test instance first reaches loss <= thr * loss(x0),
// running at most n_eval iterations; median over repeats.
void time_to_thresholds(const UpdateRule& rule, std::span<const Problem> test, const Vec& x0, int n_eval,
                        const std::vector<double>& thresholds, int repeats, std::vector<double>& seconds,
                        std::vector<int>& reached) {
  using Clock = std::chrono::steady_clock;
  const std::size_t nt = thresholds.size();
  std::vector<std::vector<double>> per_rep(nt);
  reached.assign(nt, 0);
  for (int rep = 0; rep < repeats; ++rep) {
    std::vector<double> total(nt, 0.0);
    std::vector<int> hits(nt, 0);
    for (const Problem& prob : test) {
      const double l0 = prob.loss(x0);
      std::vector<bool> done(nt, false);
      std::size_t remaining = nt;
      IterState state = start_state(x0);
      const auto t0 = Clock::now();
      for (int k = 0; k <= n_eval && remaining > 0; ++k) {
        if (k > 0) state = rule.step(state, prob);
        const double l = prob.loss(state.x);
        for (std::size_t t = 0; t < nt; ++t) {
          if (!done[t] && l <= thresholds[t] * l0) {
            done[t] = true;
            --remaining;
            ++hits[t];
            total[t] += std::chrono::duration<double>(Clock::now() - t0).count();
          }
        }
      }
      const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
      for (std::size_t t = 0; t < nt; ++t) {
        if (!done[t]) total[t] += elapsed;
      }
    }
    for (std::size_t t = 0; t < nt; ++t) per_rep[t].push_back(total[t]);
    reached = hits;
  }
  seconds.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) seconds[t] = percentile(per_rep[t], 0.5);
}

}  // namespace

EvaluationReport evaluate(const ExperimentConfig& cfg, const Dataset& data, const SampleSet& samples,
                          const PosteriorResult& post) {
  return run_stage(Stage::evaluate, [&] {
    const Vec x0 = initial_point(cfg);
    const TestSet test = data.split.test_set();
    auto rule = make_rule(cfg, data);
    rule->set_parameters(samples.points.at(post.certificate.point_estimate));
    auto baseline = make_baseline(cfg);

    EvaluationReport r;
    for (const Problem& prob : test) {
      r.learned_runs.push_back(run_losses(*rule, prob, x0, cfg.n_eval));
      r.baseline_runs.push_back(run_losses(*baseline, prob, x0, cfg.n_eval));
      r.test_losses.push_back(r.learned_runs.back()[static_cast<std::size_t>(cfg.n_train)]);
    }
    r.learned = loss_percentiles(r.learned_runs);
    r.baseline = loss_percentiles(r.baseline_runs);
    r.learned_median_at_train = r.learned.p50[static_cast<std::size_t>(cfg.n_train)];
    r.baseline_median_at_train = r.baseline.p50[static_cast<std::size_t>(cfg.n_train)];
    r.histogram = make_histogram(r.test_losses, cfg.histogram_bins);
    r.bound = post.certificate.bound;

    std::vector<double> ls, bs;
    std::vector<int> lr, br;
    time_to_thresholds(*rule, test.items(), x0, cfg.n_eval, cfg.time_thresholds, cfg.timing_repeats, ls, lr);
    time_to_thresholds(*baseline, test.items(), x0, cfg.n_eval, cfg.time_thresholds, cfg.timing_repeats, bs, br);
    for (std::size_t t = 0; t < cfg.time_thresholds.size(); ++t) {
      r.times.push_back({cfg.time_thresholds[t], ls[t], bs[t], lr[t], br[t]});
    }

    Rng rng = stage_rng(cfg.seed, Stage::evaluate);
    r.test_probability = estimate_sublevel_probability(*rule, test.items(), x0, cfg.n_train, cfg.sublevel, rng);
    int hits = 0;
    for (const Problem& prob : test) hits += sublevel_indicator(*rule, prob, x0, cfg.n_train, cfg.sublevel);
    r.test_hit_rate = static_cast<double>(hits) / static_cast<double>(test.size());

    const DiscreteMeasure& q = post.certificate.posterior;
    auto member = make_rule(cfg, data);
    for (std::size_t i = 0; i < q.size(); ++i) {
      const std::size_t id = q.support_ids[i];
      member->set_parameters(samples.points.at(id));
      const double risk =
          empirical_sublevel_risk(*member, test.items(), samples.estimates.at(id).point, x0, cfg.n_train, cfg.sublevel);
      r.test_risk_posterior += q.weight(i) * risk;
      if (id == post.certificate.point_estimate) r.test_risk_point = risk;
    }
    return r;
  });
}

void emit_plot_data(const EvaluationReport& r, const SublevelSpec& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("loss_curves.csv");
    out << "iteration,learned_p10,learned_p50,learned_p90,learned_mean,"
           "baseline_p10,baseline_p50,baseline_p90,baseline_mean\n";
    for (std::size_t k = 0; k < r.learned.p50.size(); ++k) {
      out << k << ',' << fmt(r.learned.p10[k]) << ',' << fmt(r.learned.p50[k]) << ',' << fmt(r.learned.p90[k]) << ','
          << fmt(r.learned.mean[k]) << ',' << fmt(r.baseline.p10[k]) << ',' << fmt(r.baseline.p50[k]) << ','
          << fmt(r.baseline.p90[k]) << ',' << fmt(r.baseline.mean[k]) << '\n';
    }
  }
  {
    auto out = open("histogram.csv");
    out << "# bound=" << fmt(r.bound) << '\n' << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < r.histogram.counts.size(); ++b) {
      out << fmt(r.histogram.edges[b]) << ',' << fmt(r.histogram.edges[b + 1]) << ',' << r.histogram.counts[b] << '\n';
    }
  }
  {
    auto out = open("cumtime.csv");
    out << "threshold,learned_seconds,baseline_seconds,learned_reached,baseline_reached\n";
    for (const auto& t : r.times) {
      out << fmt(t.threshold) << ',' << fmt(t.learned_seconds) << ',' << fmt(t.baseline_seconds) << ','
          << t.learned_reached << ',' << t.baseline_reached << '\n';
    }
  }
  {
    auto out = open("sublevel_posterior.csv");
    const BetaPosterior& b = r.test_probability.posterior;
    out << "# a=" << fmt(b.a) << " b=" << fmt(b.b) << " mean=" << fmt(b.mean())
        << " q_lo=" << fmt(beta_quantile(b, spec.q_lo)) << " q_hi=" << fmt(beta_quantile(b, spec.q_hi)) << '\n'
        << "p,density\n";
    const double log_norm = std::lgamma(b.a + b.b) - std::lgamma(b.a) - std::lgamma(b.b);
    constexpr int kPoints = 201;
    for (int i = 0; i < kPoints; ++i) {
      const double p = static_cast<double>(i) / (kPoints - 1);
      double dens = 0.0;
      if (p > 0.0 && p < 1.0) {
        dens = std::exp(log_norm + (b.a - 1.0) * std::log(p) + (b.b - 1.0) * std::log1p(-p));
      } else if ((p == 0.0 && b.a == 1.0) || (p == 1.0 && b.b == 1.0)) {
        dens = std::exp(log_norm);
      }
      out << fmt(p) << ',' << fmt(dens) << '\n';
    }
  }
}

void save_dataset(const std::filesystem::path& dir, const Dataset& data) {
  write_json_file(dir / files::data, problems_to_json(data.all));
}

Dataset load_dataset(const std::filesystem::path& dir, const ExperimentConfig& cfg) {
  return dataset_from_problems(problems_from_json(read_json_file(dir / files::data)), cfg);
}

void save_init(const std::filesystem::path& dir, const InitResult& r) {
  write_json_file(dir / files::init, Json{{"alpha", vec_to_json(r.alpha)},
                                          {"converged", r.converged},
                                          {"final_mean", r.final_mean},
                                          {"iterations", r.iterations}});
}

InitResult load_init(const std::filesystem::path& dir) {
  const Json j = read_json_file(dir / files::init);
  return {vec_from_json(j.at("alpha")), j.at("converged").get<bool>(), j.at("final_mean").get<double>(),
          j.at("iterations").get<int>()};
}

void save_location(const std::filesystem::path& dir, const PriorLocation& loc) {
  write_json_file(dir / files::location, Json{{"alpha", vec_to_json(loc.alpha)},
                                              {"constraint_found", loc.constraint_found},
                                              {"estimate", loc.estimate},
                                              {"checks", loc.checks},
                                              {"rollbacks", loc.rollbacks}});
  std::ofstream out(dir / files::progress);
  out << "step,ratio_loss,accepted\n";
  for (const auto& row : loc.log) out << row.step << ',' << fmt(row.ratio_loss) << ',' << (row.accepted ? 1 : 0) << '\n';
}

PriorLocation load_location(const std::filesystem::path& dir) {
  const Json j = read_json_file(dir / files::location);
  PriorLocation loc;
  loc.alpha = vec_from_json(j.at("alpha"));
  loc.constraint_found = j.at("constraint_found").get<bool>();
  loc.estimate = j.at("estimate").get<ProbabilityEstimate>();
  loc.checks = j.at("checks").get<int>();
  loc.rollbacks = j.at("rollbacks").get<int>();
  return loc;
}

void save_samples(const std::filesystem::path& dir, const SampleSet& s) { write_json_file(dir / files::samples, s); }

SampleSet load_samples(const std::filesystem::path& dir) {
  return read_json_file(dir / files::samples).get<SampleSet>();
}

void save_posterior(const std::filesystem::path& dir, const PosteriorResult& p, const std::string& hash) {
  Json pot = Json::array();
  for (double v : p.prior.potentials) {
    pot.push_back(std::isfinite(v) ? Json(v) : Json(nullptr));
  }
  write_json_file(dir / files::posterior, Json{{"prior", p.prior.measure}, {"potentials", pot}, {"stats", p.stats}});
  write_json_file(dir / files::certificate, certificate_to_json(p.certificate, hash));
}

PosteriorResult load_posterior(const std::filesystem::path& dir) {
  const Json j = read_json_file(dir / files::posterior);
  PosteriorResult p;
  p.prior.measure = j.at("prior").get<DiscreteMeasure>();
  for (const Json& v : j.at("potentials")) {
    p.prior.potentials.push_back(v.is_null() ? -std::numeric_limits<double>::infinity() : v.get<double>());
  }
  p.stats = j.at("stats").get<SufficientStats>();
  p.certificate = certificate_from_json(read_json_file(dir / files::certificate));
  return p;
}

Json report_summary(const EvaluationReport& r) {
  Json times = Json::array();
  for (const auto& t : r.times) {
    times.push_back({{"threshold", t.threshold},
                     {"learned_seconds", t.learned_seconds},
                     {"baseline_seconds", t.baseline_seconds},
                     {"learned_reached", t.learned_reached},
                     {"baseline_reached", t.baseline_reached}});
  }
  return Json{{"bound", r.bound},
              {"test_risk_posterior", r.test_risk_posterior},
              {"test_risk_point", r.test_risk_point},
              {"test_hit_rate", r.test_hit_rate},
              {"test_probability", r.test_probability},
              {"learned_median_at_train", r.learned_median_at_train},
              {"baseline_median_at_train", r.baseline_median_at_train},
              {"times", times}};
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, const PipelineOptions& opts) {
  cfg.validate();
  const std::string hash = config_hash(cfg);
  PipelineResult res;
  const auto& dir = opts.out_dir;
  if (dir) write_json_file(*dir / files::config, config_to_json(cfg));

  res.data = run_stage(Stage::data, [&] { return generate_dataset(cfg); });
  if (dir) save_dataset(*dir, res.data);
  res.init = stage_init(cfg, res.data);
  if (dir) save_init(*dir, res.init);
  res.location = stage_locate(cfg, res.data, res.init.alpha);
  if (dir) save_location(*dir, res.location);
  res.samples = stage_sample(cfg, res.data, res.location);
  if (dir) save_samples(*dir, res.samples);
  res.posterior = stage_posterior(cfg, res.data, res.samples);
  if (dir) save_posterior(*dir, res.posterior, hash);
  if (opts.evaluate) {
    res.report = evaluate(cfg, res.data, res.samples, res.posterior);
    if (dir) {
      write_json_file(*dir / files::report, report_summary(*res.report));
      emit_plot_data(*res.report, cfg.sublevel, *dir);
    }
  }
  return res;
}

}  // namespace pacl2o
