#include "pacl2o/sampler.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pacl2o {

void SgldConfig::validate() const {
  if (!(step0 > 0.0)) throw std::invalid_argument("sgld: step0 must be positive");
  if (!(decay_offset > 0.0) || !(decay_exponent >= 0.0)) throw std::invalid_argument("sgld: invalid decay");
  if (n_samples < 1) throw std::invalid_argument("sgld: n_samples must be >= 1");
  if (thinning < 1) throw std::invalid_argument("sgld: thinning must be >= 1");
  if (patience < 1) throw std::invalid_argument("sgld: patience must be >= 1");
}

double sgld_step_size(const SgldConfig& cfg, int k) {
  return cfg.step0 * std::pow(1.0 + static_cast<double>(k) / cfg.decay_offset, -cfg.decay_exponent);
}

Vec sgld_step(const Vec& alpha, const Vec& grad, double step, Rng& rng) {
  if (alpha.size() != grad.size()) throw std::invalid_argument("sgld_step: length mismatch");
  if (!(step >= 0.0)) throw std::invalid_argument("sgld_step: negative step");
  std::normal_distribution<double> noise(0.0, std::sqrt(step));
  Vec out = alpha - 0.5 * step * grad;
  for (Index i = 0; i < out.size(); ++i) out[i] += noise(rng);
  return out;
}

SampleSet constrained_sample(const Vec& start, const ProbabilityEstimate& start_estimate,
                             const StochasticGradient& grad, const ConstraintEstimator& constraint,
                             const SublevelSpec& spec, const SgldConfig& cfg, Rng& rng) {
  cfg.validate();
  spec.validate();
  SampleSet out;
  Vec current = start;
  ProbabilityEstimate current_est = start_estimate;
  int rejected_run = 0;
  while (static_cast<int>(out.points.size()) < cfg.n_samples) {
    const Vec proposal = sgld_step(current, grad(current, rng), sgld_step_size(cfg, out.proposals), rng);
    ++out.proposals;
    bool moved = false;
    if (proposal.allFinite()) {
      const ProbabilityEstimate est = constraint(proposal, rng);
      if (est.satisfies(spec)) {
        current = proposal;
        current_est = est;
        moved = true;
      }
    }
    if (moved) {
      ++out.accepted;
      rejected_run = 0;
    } else if (++rejected_run >= cfg.patience) {
      std::ostringstream msg;
      msg << "constrained_sample: no accepted proposal in the last " << cfg.patience << " (" << out.accepted
          << " of " << out.proposals << " accepted overall, " << out.points.size() << " samples collected)";
      throw std::runtime_error(msg.str());
    }
    if (out.proposals % cfg.thinning == 0) {
      out.points.push_back(current);
      out.accepted_flags.push_back(moved);
      out.estimates.push_back(current_est);
    }
  }
  return out;
}

SampleSet constrained_sample(const LearnedRule& prototype, const Vec& start,
                             const ProbabilityEstimate& start_estimate, const SamplerData& data,
                             const SublevelSpec& spec, const SgldConfig& cfg, Rng& rng) {
  auto rule = prototype.clone();
  TrajectoryScheduler sched(data.segment_len, data.target_len, data.x0, data.prior.items(), rng);
  StochasticGradient grad = [&](const Vec& alpha, Rng& r) -> Vec {
    rule->set_parameters(alpha);
    SegmentResult seg = ratio_segment(*rule, sched.instance(), sched.state(), data.segment_len);
    if (!seg.finite) {
      sched.restart(r);
      return Vec::Zero(alpha.size());
    }
    sched.schedule_next(seg.final_state, r);
    return seg.grad;
  };
  ConstraintEstimator constraint = [&](const Vec& alpha, Rng& r) {
    rule->set_parameters(alpha);
    return estimate_sublevel_probability(*rule, data.val, data.x0, data.horizon, spec, r);
  };
  return constrained_sample(start, start_estimate, grad, constraint, spec, cfg, rng);
}

}  // namespace pacl2o
