#include "pacl2o/prior_training.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pacl2o {

TrajectoryScheduler::TrajectoryScheduler(int segment_len, int target_len, Vec x0, std::span<const Problem> pool,
                                         Rng& rng)
    : segment_len_(segment_len), target_len_(target_len), x0_(std::move(x0)), pool_(pool) {
  if (segment_len < 1 || segment_len > target_len) {
    throw std::invalid_argument("TrajectoryScheduler: need 1 <= segment_len <= target_len");
  }
  if (pool.empty()) throw std::invalid_argument("TrajectoryScheduler: empty instance pool");
  restart(rng);
}

void TrajectoryScheduler::restart(Rng& rng) {
  instance_ = std::uniform_int_distribution<std::size_t>(0, pool_.size() - 1)(rng);
  state_ = start_state(x0_);
}

bool TrajectoryScheduler::schedule_next(const IterState& final_point, Rng& rng) {
  const bool r = std::bernoulli_distribution(restart_prob())(rng);
  if (r) {
    restart(rng);
  } else {
    state_ = final_point;
  }
  return r;
}

double ratio_loss(std::span<const double> losses) {
  double total = 0.0;
  for (std::size_t i = 1; i < losses.size(); ++i) {
    if (losses[i - 1] > 0.0) total += losses[i] / losses[i - 1];
  }
  return total;
}

double imitation_loss(const UpdateRule& learned, const UpdateRule& reference, const Problem& problem,
                      const IterState& start, int s) {
  if (s < 1) throw std::invalid_argument("imitation_loss: s must be >= 1");
  IterState x = start;
  IterState y = start;
  double total = 0.0;
  for (int k = 0; k < s; ++k) {
    x = learned.step(x, problem);
    y = reference.step(y, problem);
    total += (x.x - y.x).squaredNorm();
  }
  return total / s;
}

SegmentResult ratio_segment(const LearnedRule& rule, const Problem& problem, const IterState& start, int s) {
  SegmentResult res;
  res.grad = Vec::Zero(static_cast<Index>(rule.parameter_count()));
  IterState state = start;
  double prev = problem.loss(state.x);
  for (int i = 0; i < s; ++i) {
    IterState next = rule.step(state, problem);
    const double cur = problem.loss(next.x);
    if (prev > 0.0) {
      res.loss += cur / prev;
      res.grad += rule.vjp(state, problem, problem.gradient(next.x) / prev);
    }
    state = std::move(next);
    prev = cur;
  }
  res.final_state = std::move(state);
  res.finite = std::isfinite(res.loss) && res.grad.allFinite() && res.final_state.x.allFinite();
  return res;
}

SegmentResult imitation_segment(const LearnedRule& rule, const UpdateRule& reference, const Problem& problem,
                                const IterState& start, int s) {
  if (s < 1) throw std::invalid_argument("imitation_segment: s must be >= 1");
  SegmentResult res;
  res.grad = Vec::Zero(static_cast<Index>(rule.parameter_count()));
  IterState x = start;
  IterState y = start;
  for (int k = 0; k < s; ++k) {
    IterState next = rule.step(x, problem);
    y = reference.step(y, problem);
    const Vec diff = next.x - y.x;
    res.loss += diff.squaredNorm() / s;
    res.grad += rule.vjp(x, problem, (2.0 / s) * diff);
    x = std::move(next);
  }
  res.final_state = std::move(x);
  res.reference_state = std::move(y);
  res.finite = std::isfinite(res.loss) && res.grad.allFinite() && res.final_state.x.allFinite();
  return res;
}

double halving_schedule(double lr0, int decay_every, std::int64_t step) {
  if (decay_every <= 0) return lr0;
  return lr0 * std::pow(0.5, static_cast<double>(step / decay_every));
}

InitResult find_initialization(LearnedRule& rule, const UpdateRule& reference, PriorSet prior, const Vec& x0,
                               const InitConfig& cfg, Rng& rng) {
  if (cfg.window < 1) throw std::invalid_argument("find_initialization: window must be >= 1");
  TrajectoryScheduler sched(cfg.segment_len, cfg.target_len, x0, prior.items(), rng);
  AdamState adam(rule.parameter_count(), cfg.adam);
  Vec alpha = rule.parameters();

  InitResult best{alpha, false, std::numeric_limits<double>::infinity(), 0};
  // The reference keeps its own extrapolation counter across continued segments.
  double ref_t = 1.0;
  int iter = 0;
  while (iter < cfg.max_iters) {
    double window_sum = 0.0;
    for (int i = 0; i < cfg.window && iter < cfg.max_iters; ++i, ++iter) {
      adam.config.lr = halving_schedule(cfg.adam.lr, cfg.decay_every, iter);
      IterState start = sched.state();
      start.t = ref_t;
      SegmentResult seg = imitation_segment(rule, reference, sched.instance(), start, cfg.segment_len);
      if (!seg.finite) {
        ref_t = 1.0;
        // A diverging imitation run counts at the largest finite loss so the
        // window cannot pass; the instance is discarded.
        window_sum = std::numeric_limits<double>::max();
        sched.restart(rng);
        continue;
      }
      window_sum += seg.loss;
      adam_step(adam, alpha, seg.grad);
      rule.set_parameters(alpha);
      ref_t = sched.schedule_next(seg.final_state, rng) ? 1.0 : seg.reference_state.t;
    }
    const double mean = window_sum / cfg.window;
    if (mean < best.final_mean) best = {alpha, false, mean, iter};
    if (mean < cfg.tolerance) {
      rule.set_parameters(alpha);
      return {alpha, true, mean, iter};
    }
  }
  rule.set_parameters(best.alpha);
  best.iterations = iter;
  return best;
}

PriorLocation locate_prior(LearnedRule& rule, PriorSet prior, ValSet val, const Vec& x0, const SublevelSpec& spec,
                           const LocateConfig& cfg, Rng& rng) {
  spec.validate();
  if (cfg.check_every < 1 || cfg.n_max < 0) throw std::invalid_argument("locate_prior: invalid schedule");
  TrajectoryScheduler sched(cfg.segment_len, cfg.target_len, x0, prior.items(), rng);
  AdamState adam(rule.parameter_count(), cfg.adam);

  PriorLocation out;
  Vec alpha = rule.parameters();
  Vec checkpoint = alpha;
  ProbabilityEstimate checkpoint_est;
  bool inside = false;

  auto check = [&](const Vec& candidate) {
    rule.set_parameters(candidate);
    ++out.checks;
    return estimate_sublevel_probability(rule, val, x0, cfg.horizon, spec, rng);
  };

  for (int i = 1; i <= cfg.n_max; ++i) {
    rule.set_parameters(alpha);
    adam.config.lr = halving_schedule(cfg.adam.lr, cfg.decay_every, i - 1);
    SegmentResult seg = ratio_segment(rule, sched.instance(), sched.state(), cfg.segment_len);
    if (!seg.finite) {
      out.log.push_back({i, std::numeric_limits<double>::quiet_NaN(), false});
      sched.restart(rng);
      continue;
    }
    Vec proposal = alpha;
    adam_step(adam, proposal, seg.grad);

    bool accepted = true;
    if (i % cfg.check_every == 0) {
      const ProbabilityEstimate est = check(proposal);
      if (est.satisfies(spec)) {
        inside = true;
        checkpoint = proposal;
        checkpoint_est = est;
      } else if (inside) {
        accepted = false;
      }
    }
    out.log.push_back({i, seg.loss, accepted});
    if (!accepted) {
      alpha = checkpoint;
      ++out.rollbacks;
      sched.restart(rng);
      continue;
    }
    alpha = std::move(proposal);
    sched.schedule_next(seg.final_state, rng);
  }

  // Unchecked steps since the last check are verified once more at the end.
  const ProbabilityEstimate final_est = check(alpha);
  if (final_est.satisfies(spec)) {
    out.alpha = alpha;
    out.constraint_found = true;
    out.estimate = final_est;
  } else if (inside) {
    out.alpha = checkpoint;
    out.constraint_found = true;
    out.estimate = checkpoint_est;
  } else {
    out.alpha = alpha;
    out.constraint_found = false;
    out.estimate = final_est;
  }
  rule.set_parameters(out.alpha);
  return out;
}

}  // namespace pacl2o
