#include "pacl2o/pac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pacl2o {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_aligned(const DiscreteMeasure& m, const SufficientStats& stats) {
  if (stats.t1.size() != m.size() || stats.t2.size() != m.size()) {
    throw std::invalid_argument("statistics not aligned with the measure support");
  }
}

const Vec& sample_point(const SampleSet& samples, std::size_t id) {
  if (id >= samples.points.size()) throw std::out_of_range("support id outside the sample set");
  return samples.points[id];
}

}  // namespace

double log_sum_exp(std::span<const double> v) {
  double hi = kNegInf;
  for (double x : v) hi = std::max(hi, x);
  if (hi == kNegInf) return kNegInf;
  if (std::isinf(hi)) return hi;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

double DiscreteMeasure::weight(std::size_t i) const { return std::exp(log_weights.at(i)); }

std::vector<double> DiscreteMeasure::weights() const {
  std::vector<double> w(log_weights.size());
  std::transform(log_weights.begin(), log_weights.end(), w.begin(), [](double l) { return std::exp(l); });
  return w;
}

std::size_t DiscreteMeasure::find(std::size_t id) const noexcept {
  const auto it = std::find(support_ids.begin(), support_ids.end(), id);
  return static_cast<std::size_t>(it - support_ids.begin());
}

DiscreteMeasure softmax_measure(std::span<const double> potentials) {
  DiscreteMeasure m;
  std::vector<double> kept;
  for (std::size_t i = 0; i < potentials.size(); ++i) {
    if (std::isnan(potentials[i])) throw std::invalid_argument("softmax_measure: NaN potential");
    if (potentials[i] == kNegInf) continue;
    m.support_ids.push_back(i);
    kept.push_back(potentials[i]);
  }
  if (kept.empty()) throw std::runtime_error("softmax_measure: empty support");
  const double z = log_sum_exp(kept);
  if (!std::isfinite(z)) throw std::invalid_argument("softmax_measure: non-finite normalizer");
  m.log_weights.reserve(kept.size());
  for (double p : kept) m.log_weights.push_back(p - z);
  return m;
}

void PacConfig::validate() const {
  if (!(lambda_min > 0.0 && lambda_max >= lambda_min)) throw std::invalid_argument("pac: invalid lambda range");
  if (grid_size < 1) throw std::invalid_argument("pac: grid_size must be >= 1");
  if (grid_size == 1 && lambda_max != lambda_min) throw std::invalid_argument("pac: single grid point needs min == max");
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("pac: confidence must be in (0, 1)");
}

std::vector<double> PacConfig::grid() const {
  validate();
  std::vector<double> g(static_cast<std::size_t>(grid_size));
  if (grid_size == 1) {
    g[0] = lambda_min;
    return g;
  }
  const double lo = std::log(lambda_min);
  const double span = std::log(lambda_max) - lo;
  for (int i = 0; i < grid_size; ++i) g[i] = std::exp(lo + span * i / (grid_size - 1));
  g.front() = lambda_min;
  g.back() = lambda_max;
  return g;
}

double PacConfig::log_k_over_eps() const { return std::log(static_cast<double>(grid_size) / confidence); }

SublevelMoments sublevel_moments(const UpdateRule& rule, std::span<const Problem> instances, double p_hat,
                                 const Vec& x0, int k, const SublevelSpec& spec) {
  if (!(p_hat > 0.0)) throw std::invalid_argument("sublevel_moments: p_hat must be positive");
  if (instances.empty()) throw std::invalid_argument("sublevel_moments: no instances");
  SublevelMoments m;
  for (const Problem& prob : instances) {
    const double g = sublevel_threshold(spec, prob, x0);
    const double final = final_loss(rule, prob, x0, k);
    if (std::isfinite(final) && final <= g) {
      m.risk += final;
      m.g2_mean += g * g;
      m.hit_rate += 1.0;
    }
  }
  const double n = static_cast<double>(instances.size());
  m.risk /= p_hat * n;
  m.g2_mean /= n;
  m.hit_rate /= n;
  return m;
}

double empirical_sublevel_risk(const UpdateRule& rule, std::span<const Problem> instances, double p_hat,
                               const Vec& x0, int k, const SublevelSpec& spec) {
  return sublevel_moments(rule, instances, p_hat, x0, k, spec).risk;
}

double phi_prior(const UpdateRule& rule, PriorSet prior, double p_hat, const Vec& x0, int k,
                 const SublevelSpec& spec) {
  if (!spec.in_band(p_hat) || !(p_hat > 0.0)) return kNegInf;
  return -empirical_sublevel_risk(rule, prior.items(), p_hat, x0, k, spec);
}

PriorBuild build_prior(const SampleSet& samples, const LearnedRule& prototype, PriorSet prior, const Vec& x0,
                       int k, const SublevelSpec& spec) {
  if (samples.points.size() != samples.estimates.size()) {
    throw std::invalid_argument("build_prior: points and estimates differ in length");
  }
  auto rule = prototype.clone();
  PriorBuild out;
  out.potentials.resize(samples.points.size(), kNegInf);
  for (std::size_t i = 0; i < samples.points.size(); ++i) {
    const ProbabilityEstimate& est = samples.estimates[i];
    if (!est.satisfies(spec)) continue;
    rule->set_parameters(samples.points[i]);
    out.potentials[i] = phi_prior(*rule, prior, est.point, x0, k, spec);
  }
  out.measure = softmax_measure(out.potentials);
  return out;
}

SufficientStats build_stats(const DiscreteMeasure& prior, const SampleSet& samples, const LearnedRule& prototype,
                            TrainSet train, const Vec& x0, int k, const SublevelSpec& spec) {
  auto rule = prototype.clone();
  SufficientStats stats;
  const double n = static_cast<double>(train.size());
  for (std::size_t id : prior.support_ids) {
    const double p_hat = samples.estimates.at(id).point;
    rule->set_parameters(sample_point(samples, id));
    const SublevelMoments m = sublevel_moments(*rule, train.items(), p_hat, x0, k, spec);
    stats.t1.push_back(-m.risk);
    stats.t2.push_back(m.g2_mean / (p_hat * p_hat * n));
  }
  return stats;
}

SufficientStats build_stats_bounded(const DiscreteMeasure& prior, const SampleSet& samples,
                                    const LearnedRule& prototype, TrainSet train, const Vec& x0, int k,
                                    const BoundedStatsSpec& bspec) {
  if (bspec.bound_const < 0.0 || bspec.second_moment < 0.0) {
    throw std::invalid_argument("build_stats_bounded: constants must be nonnegative");
  }
  if (train.empty()) throw std::invalid_argument("build_stats_bounded: no training instances");
  auto rule = prototype.clone();
  SufficientStats stats;
  const double n = static_cast<double>(train.size());
  for (std::size_t id : prior.support_ids) {
    const double rho = bspec.rho.at(id);
    if (rho < 0.0) throw std::invalid_argument("build_stats_bounded: rho must be nonnegative");
    rule->set_parameters(sample_point(samples, id));
    double risk = 0.0;
    for (const Problem& prob : train) risk += final_loss(*rule, prob, x0, k);
    stats.t1.push_back(-risk / n);
    stats.t2.push_back(rho * rho * bspec.bound_const * bspec.bound_const * bspec.second_moment / n);
  }
  return stats;
}

double kappa_tilde(double lambda, const DiscreteMeasure& prior, const SufficientStats& stats) {
  check_aligned(prior, stats);
  std::vector<double> terms(prior.size());
  for (std::size_t i = 0; i < prior.size(); ++i) {
    terms[i] = prior.log_weights[i] + lambda * stats.t1[i] - 0.5 * lambda * lambda * stats.t2[i];
  }
  return log_sum_exp(terms);
}

double pac_objective(double lambda, const DiscreteMeasure& prior, const SufficientStats& stats,
                     const PacConfig& cfg) {
  if (!(lambda > 0.0)) throw std::invalid_argument("pac_objective: lambda must be positive");
  return -(kappa_tilde(lambda, prior, stats) - cfg.log_k_over_eps()) / lambda;
}

double optimize_lambda(const DiscreteMeasure& prior, const SufficientStats& stats, const PacConfig& cfg) {
  double best_lambda = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (double lambda : cfg.grid()) {
    const double f = pac_objective(lambda, prior, stats, cfg);
    if (f < best) {
      best = f;
      best_lambda = lambda;
    }
  }
  if (best_lambda == 0.0) throw std::runtime_error("optimize_lambda: objective not finite on the grid");
  return best_lambda;
}

DiscreteMeasure build_posterior(double lambda, const DiscreteMeasure& prior, const SufficientStats& stats) {
  check_aligned(prior, stats);
  DiscreteMeasure q;
  q.support_ids = prior.support_ids;
  q.log_weights.resize(prior.size());
  for (std::size_t i = 0; i < prior.size(); ++i) {
    q.log_weights[i] = prior.log_weights[i] + lambda * stats.t1[i] - 0.5 * lambda * lambda * stats.t2[i];
  }
  const double z = log_sum_exp(q.log_weights);
  for (double& l : q.log_weights) l -= z;
  return q;
}

double kl_divergence(const DiscreteMeasure& q, const DiscreteMeasure& p) {
  double kl = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double lq = q.log_weights[i];
    if (lq == kNegInf) continue;
    const std::size_t j = p.find(q.support_ids[i]);
    if (j == p.size() || p.log_weights[j] == kNegInf) return std::numeric_limits<double>::infinity();
    kl += std::exp(lq) * (lq - p.log_weights[j]);
  }
  return std::max(kl, 0.0);
}

std::size_t point_estimate(const DiscreteMeasure& posterior) {
  if (posterior.size() == 0) throw std::invalid_argument("point_estimate: empty measure");
  std::size_t best = 0;
  for (std::size_t i = 1; i < posterior.size(); ++i) {
    const double li = posterior.log_weights[i];
    const double lb = posterior.log_weights[best];
    if (li > lb || (li == lb && posterior.support_ids[i] < posterior.support_ids[best])) best = i;
  }
  return posterior.support_ids[best];
}

PacCertificate certify(double lambda_star, const DiscreteMeasure& prior, const DiscreteMeasure& posterior,
                       const SufficientStats& stats, const PacConfig& cfg) {
  check_aligned(prior, stats);
  if (posterior.support_ids != prior.support_ids) {
    throw std::invalid_argument("certify: posterior must share the prior's support order");
  }
  PacCertificate c;
  c.lambda_star = lambda_star;
  c.posterior = posterior;
  c.kl = kl_divergence(posterior, prior);
  double q_t2 = 0.0;
  for (std::size_t i = 0; i < posterior.size(); ++i) {
    const double w = posterior.weight(i);
    c.emp_risk -= w * stats.t1[i];
    q_t2 += w * stats.t2[i];
  }
  c.bound_explicit = c.emp_risk + (c.kl + cfg.log_k_over_eps() + 0.5 * lambda_star * lambda_star * q_t2) / lambda_star;
  c.bound = pac_objective(lambda_star, prior, stats, cfg);
  c.point_estimate = point_estimate(posterior);
  c.point_emp_risk = -stats.t1[prior.find(c.point_estimate)];
  return c;
}

}  // namespace pacl2o
