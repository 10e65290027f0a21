#pragma once

#include <functional>
#include <vector>

#include "pacl2o/algorithms.hpp"
#include "pacl2o/problems.hpp"

namespace pacl2o {

// Sublevel set {final loss <= g(theta)} with g(theta) = g_scale * loss(x0)^g_exponent,
// the admissible probability band [p_lo, p_hi], and the stopping rule of the
// sequential estimator (stop once the [q_lo, q_hi] posterior interval is
// narrower than width_tol).
struct SublevelSpec {
  double g_scale = 1.0;
  double g_exponent = 1.0;
  double p_lo = 0.95;
  double p_hi = 1.0;
  double q_lo = 0.01;
  double q_hi = 0.99;
  double width_tol = 0.075;
  int max_draws = 10000;

  void validate() const;
  bool in_band(double p) const noexcept { return p >= p_lo && p <= p_hi; }
};

// Beta(a, b) posterior over a Bernoulli rate, starting from Beta(1, 1).
struct BetaPosterior {
  double a = 1.0;
  double b = 1.0;

  void update(bool outcome) noexcept {
    a += outcome ? 1.0 : 0.0;
    b += outcome ? 0.0 : 1.0;
  }
  double mean() const noexcept { return a / (a + b); }
};

double sublevel_threshold(const SublevelSpec& spec, const Problem& problem, const Vec& x0);

/// Runs k iterations from x0 and reports loss(final) <= g(theta).
bool sublevel_indicator(const UpdateRule& rule, const Problem& problem, const Vec& x0, int k,
                        const SublevelSpec& spec);

/// Inverse CDF of Beta(post.a, post.b) at level q.
double beta_quantile(const BetaPosterior& post, double q);

struct ProbabilityEstimate {
  double point = 0.0;  // posterior mean
  BetaPosterior posterior;
  int draws_used = 0;
  bool conclusive = true;  // false when max_draws was hit

  /// Inconclusive estimates never count as satisfying the constraint.
  bool satisfies(const SublevelSpec& spec) const noexcept { return conclusive && spec.in_band(point); }
};

/// Sequential Beta-Bernoulli estimation: draw from `next_outcome` while the
/// posterior interval [Q(q_lo), Q(q_hi)] is at least width_tol wide.
ProbabilityEstimate estimate_probability(const std::function<bool()>& next_outcome,
                                         const SublevelSpec& spec);

/// Sublevel probability of `rule` on validation instances drawn uniformly with
/// replacement. Indicators are deterministic per instance and computed once.
ProbabilityEstimate estimate_sublevel_probability(const UpdateRule& rule, ValSet val, const Vec& x0,
                                                  int k, const SublevelSpec& spec, Rng& rng);

/// Same estimator over an arbitrary instance set (used for test-split reporting).
ProbabilityEstimate estimate_sublevel_probability(const UpdateRule& rule, std::span<const Problem> pool,
                                                  const Vec& x0, int k, const SublevelSpec& spec,
                                                  Rng& rng);

}  // namespace pacl2o
