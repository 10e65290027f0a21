#include "pacl2o/sublevel.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

namespace pacl2o {

void SublevelSpec::validate() const {
  if (!(g_scale > 0.0)) throw std::invalid_argument("sublevel: g_scale must be positive");
  if (!(g_exponent >= 0.0)) throw std::invalid_argument("sublevel: g_exponent must be nonnegative");
  if (!(p_lo >= 0.0 && p_hi <= 1.0 && p_lo < p_hi)) {
    throw std::invalid_argument("sublevel: need 0 <= p_lo < p_hi <= 1");
  }
  if (!(q_lo > 0.0 && q_hi < 1.0 && q_lo < q_hi)) {
    throw std::invalid_argument("sublevel: need 0 < q_lo < q_hi < 1");
  }
  if (!(width_tol > 0.0)) throw std::invalid_argument("sublevel: width_tol must be positive");
  if (max_draws < 0) throw std::invalid_argument("sublevel: max_draws must be nonnegative");
}

double sublevel_threshold(const SublevelSpec& spec, const Problem& problem, const Vec& x0) {
  return spec.g_scale * std::pow(problem.loss(x0), spec.g_exponent);
}

bool sublevel_indicator(const UpdateRule& rule, const Problem& problem, const Vec& x0, int k,
                        const SublevelSpec& spec) {
  const double final = final_loss(rule, problem, x0, k);
  // NaN or inf from a diverged run is outside every sublevel set.
  return std::isfinite(final) && final <= sublevel_threshold(spec, problem, x0);
}

double beta_quantile(const BetaPosterior& post, double q) {
  if (!(post.a > 0.0 && post.b > 0.0)) throw std::invalid_argument("beta_quantile: parameters must be > 0");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("beta_quantile: level outside [0, 1]");
  if (q == 0.0) return 0.0;
  if (q == 1.0) return 1.0;
  return boost::math::ibeta_inv(post.a, post.b, q);
}

ProbabilityEstimate estimate_probability(const std::function<bool()>& next_outcome,
                                         const SublevelSpec& spec) {
  ProbabilityEstimate est;
  while (beta_quantile(est.posterior, spec.q_hi) - beta_quantile(est.posterior, spec.q_lo) >= spec.width_tol) {
    if (est.draws_used >= spec.max_draws) {
      est.conclusive = false;
      break;
    }
    est.posterior.update(next_outcome());
    ++est.draws_used;
  }
  est.point = est.posterior.mean();
  return est;
}

ProbabilityEstimate estimate_sublevel_probability(const UpdateRule& rule, std::span<const Problem> pool,
                                                  const Vec& x0, int k, const SublevelSpec& spec,
                                                  Rng& rng) {
  if (pool.empty()) throw std::invalid_argument("estimate_sublevel_probability: empty instance pool");
  std::vector<std::optional<bool>> cache(pool.size());
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  return estimate_probability(
      [&]() {
        const std::size_t i = pick(rng);
        if (!cache[i]) cache[i] = sublevel_indicator(rule, pool[i], x0, k, spec);
        return *cache[i];
      },
      spec);
}

ProbabilityEstimate estimate_sublevel_probability(const UpdateRule& rule, ValSet val, const Vec& x0, int k,
                                                  const SublevelSpec& spec, Rng& rng) {
  return estimate_sublevel_probability(rule, val.items(), x0, k, spec, rng);
}

}  // namespace pacl2o
