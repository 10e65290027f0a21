#pragma once

#include <functional>
#include <vector>

#include "pacl2o/algorithms.hpp"
#include "pacl2o/prior_training.hpp"
#include "pacl2o/sublevel.hpp"

namespace pacl2o {

struct SgldConfig {
  double step0 = 1e-6;
  double decay_offset = 100.0;   // b in step0 * (1 + k / b)^(-gamma)
  double decay_exponent = 0.55;  // gamma
  int n_samples = 20;
  int thinning = 10;
  int patience = 200;  // consecutive rejections before giving up

  void validate() const;
};

/// Step size of the k-th proposal (k = 0, 1, ...).
double sgld_step_size(const SgldConfig& cfg, int k);

/// alpha - (step / 2) * grad + N(0, step * I).
Vec sgld_step(const Vec& alpha, const Vec& grad, double step, Rng& rng);

struct SampleSet {
  std::vector<Vec> points;
  std::vector<bool> accepted_flags;  // whether the chain moved at the proposal that produced the point
  std::vector<ProbabilityEstimate> estimates;
  int proposals = 0;
  int accepted = 0;
};

using StochasticGradient = std::function<Vec(const Vec& alpha, Rng& rng)>;
using ConstraintEstimator = std::function<ProbabilityEstimate(const Vec& alpha, Rng& rng)>;

/// Constrained SGLD with pluggable oracles. A proposal enters the chain only if
/// its estimate satisfies `spec`; every `thinning`-th chain state is collected
/// until n_samples points exist. Throws std::runtime_error after `patience`
/// consecutive rejections.
SampleSet constrained_sample(const Vec& start, const ProbabilityEstimate& start_estimate,
                             const StochasticGradient& grad, const ConstraintEstimator& constraint,
                             const SublevelSpec& spec, const SgldConfig& cfg, Rng& rng);

struct SamplerData {
  PriorSet prior;
  ValSet val;
  Vec x0;
  int segment_len = 1;
  int target_len = 50;
  int horizon = 50;
};

/// Same chain driven by the ratio-loss hypergradient on scheduler-drawn prior
/// instances, with the constraint estimated on the validation split.
SampleSet constrained_sample(const LearnedRule& prototype, const Vec& start,
                             const ProbabilityEstimate& start_estimate, const SamplerData& data,
                             const SublevelSpec& spec, const SgldConfig& cfg, Rng& rng);

}  // namespace pacl2o
