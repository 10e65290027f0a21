#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pacl2o/algorithms.hpp"
#include "pacl2o/sampler.hpp"
#include "pacl2o/sublevel.hpp"

namespace pacl2o {

/// log sum exp(v) with max shift; -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> v);

// Finite measure on sample ids with log-weights normalized to sum one.
struct DiscreteMeasure {
  std::vector<std::size_t> support_ids;
  std::vector<double> log_weights;

  std::size_t size() const noexcept { return support_ids.size(); }
  double weight(std::size_t i) const;
  std::vector<double> weights() const;
  /// Position of `id` in the support, or size() when absent.
  std::size_t find(std::size_t id) const noexcept;
};

/// Softmax of `potentials` over ids 0..n-1. Entries equal to -inf are dropped
/// before normalizing. Throws std::runtime_error when nothing remains.
DiscreteMeasure softmax_measure(std::span<const double> potentials);

// Per support point, aligned with the prior's support order.
struct SufficientStats {
  std::vector<double> t1;  // minus empirical (sublevel) risk on the training split
  std::vector<double> t2;  // nonnegative variance proxy
};

struct PacConfig {
  double lambda_min = 1e-4;
  double lambda_max = 1e4;
  int grid_size = 2000;
  double confidence = 0.05;  // epsilon

  void validate() const;
  /// Log-uniform grid, increasing, grid_size points.
  std::vector<double> grid() const;
  /// log(K / epsilon) with K = grid_size and no covering slack.
  double log_k_over_eps() const;
};

struct SublevelMoments {
  double risk = 0.0;     // (1 / p_hat) * mean(1{sublevel} * final loss)
  double g2_mean = 0.0;  // mean(g^2 * 1{sublevel})
  double hit_rate = 0.0;
};

/// Runs `rule` for k iterations on every instance and aggregates the sublevel
/// statistics with the plug-in probability p_hat.
SublevelMoments sublevel_moments(const UpdateRule& rule, std::span<const Problem> instances, double p_hat,
                                 const Vec& x0, int k, const SublevelSpec& spec);

double empirical_sublevel_risk(const UpdateRule& rule, std::span<const Problem> instances, double p_hat,
                               const Vec& x0, int k, const SublevelSpec& spec);

/// -risk on the prior split when p_hat lies in the band, -inf otherwise.
double phi_prior(const UpdateRule& rule, PriorSet prior, double p_hat, const Vec& x0, int k,
                 const SublevelSpec& spec);

struct PriorBuild {
  DiscreteMeasure measure;
  std::vector<double> potentials;  // one per sample, -inf when excluded
};

/// Softmax of phi_prior over the sample set; out-of-band or inconclusive points
/// are dropped from the support.
PriorBuild build_prior(const SampleSet& samples, const LearnedRule& prototype, PriorSet prior, const Vec& x0,
                       int k, const SublevelSpec& spec);

/// t1 = -empirical sublevel risk on the training split, t2 = mean(g^2 1) / (p_hat^2 N).
SufficientStats build_stats(const DiscreteMeasure& prior, const SampleSet& samples, const LearnedRule& prototype,
                            TrainSet train, const Vec& x0, int k, const SublevelSpec& spec);

struct BoundedStatsSpec {
  std::vector<double> rho;  // indexed by sample id
  double bound_const = 0.0;
  double second_moment = 0.0;  // estimate of E[loss(x0)^2]
};

/// t1 = -plain empirical risk, t2 = rho^2 C^2 second_moment / N.
SufficientStats build_stats_bounded(const DiscreteMeasure& prior, const SampleSet& samples,
                                    const LearnedRule& prototype, TrainSet train, const Vec& x0, int k,
                                    const BoundedStatsSpec& bspec);

/// log sum_i P_i exp(lambda t1_i - lambda^2 t2_i / 2).
double kappa_tilde(double lambda, const DiscreteMeasure& prior, const SufficientStats& stats);

/// -(kappa_tilde - log(K / eps)) / lambda.
double pac_objective(double lambda, const DiscreteMeasure& prior, const SufficientStats& stats,
                     const PacConfig& cfg);

/// Grid argmin of pac_objective; ties go to the smaller lambda.
double optimize_lambda(const DiscreteMeasure& prior, const SufficientStats& stats, const PacConfig& cfg);

/// Gibbs posterior Q_i proportional to P_i exp(lambda t1_i - lambda^2 t2_i / 2), same support order as the prior.
DiscreteMeasure build_posterior(double lambda, const DiscreteMeasure& prior, const SufficientStats& stats);

/// KL(Q || P) matched by id; +inf when Q charges an id outside supp(P).
double kl_divergence(const DiscreteMeasure& q, const DiscreteMeasure& p);

/// Support id of the largest posterior weight; ties go to the smallest id.
std::size_t point_estimate(const DiscreteMeasure& posterior);

struct PacCertificate {
  double lambda_star = 0.0;
  double bound = 0.0;           // F(lambda*)
  double bound_explicit = 0.0;  // Q[-t1] + (KL + log(K/eps) + lambda^2/2 Q[t2]) / lambda
  double kl = 0.0;
  double emp_risk = 0.0;        // posterior mean of -t1
  double point_emp_risk = 0.0;  // -t1 at the point estimate
  DiscreteMeasure posterior;
  std::size_t point_estimate = 0;
};

/// Requires the posterior to share the prior's support order.
PacCertificate certify(double lambda_star, const DiscreteMeasure& prior, const DiscreteMeasure& posterior,
                       const SufficientStats& stats, const PacConfig& cfg);

}  // namespace pacl2o
