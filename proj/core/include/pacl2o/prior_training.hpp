#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pacl2o/algorithms.hpp"
#include "pacl2o/sublevel.hpp"
#include "pacl2o/tensor.hpp"

namespace pacl2o {

// Randomized trajectory length: segments of s iterations, after each of which
// the trajectory restarts (fresh instance, x0) with probability s / n, so the
// expected trajectory length is n.
class TrajectoryScheduler {
 public:
  TrajectoryScheduler(int segment_len, int target_len, Vec x0, std::span<const Problem> pool, Rng& rng);

  int segment_len() const noexcept { return segment_len_; }
  int target_len() const noexcept { return target_len_; }
  double restart_prob() const noexcept {
    return static_cast<double>(segment_len_) / static_cast<double>(target_len_);
  }

  const Problem& instance() const { return pool_[instance_]; }
  std::size_t instance_index() const noexcept { return instance_; }
  const IterState& state() const noexcept { return state_; }
  const Vec& start() const noexcept { return x0_; }

  /// Draws r ~ Ber(s/n). r = 0 continues from `final_point`; r = 1 restarts at
  /// x0 with a fresh instance. Returns r.
  bool schedule_next(const IterState& final_point, Rng& rng);

  /// Unconditional restart at x0 with a fresh instance.
  void restart(Rng& rng);

 private:
  int segment_len_;
  int target_len_;
  Vec x0_;
  std::span<const Problem> pool_;
  std::size_t instance_ = 0;
  IterState state_;
};

/// sum_i 1{l_{i-1} > 0} * l_i / l_{i-1} over consecutive losses.
double ratio_loss(std::span<const double> losses);

/// (1/s) sum_k ||x_k - y_k||^2 over the first s iterates of both rules from `start`.
double imitation_loss(const UpdateRule& learned, const UpdateRule& reference, const Problem& problem,
                      const IterState& start, int s);

struct SegmentResult {
  IterState final_state;
  IterState reference_state;  // imitation only
  double loss = 0.0;
  Vec grad;  // w.r.t. alpha, iterates treated independently
  bool finite = true;
};

/// Ratio loss over s learned steps and its truncated hypergradient.
SegmentResult ratio_segment(const LearnedRule& rule, const Problem& problem, const IterState& start, int s);

/// Imitation loss over s steps and its truncated gradient.
SegmentResult imitation_segment(const LearnedRule& rule, const UpdateRule& reference, const Problem& problem,
                                const IterState& start, int s);

/// lr0 * 0.5^(floor(step / decay_every)).
double halving_schedule(double lr0, int decay_every, std::int64_t step);

struct InitConfig {
  AdamConfig adam{1e-3};
  int decay_every = 1000;
  int window = 100;  // n_init
  double tolerance = 1e-2;
  int max_iters = 3000;
  int segment_len = 1;
  int target_len = 50;
};

struct InitResult {
  Vec alpha;
  bool converged = false;
  double final_mean = 0.0;  // mean imitation loss over the last window
  int iterations = 0;
};

/// Imitation learning: Adam on the imitation loss against `reference` until the
/// mean over a window drops below the tolerance, or max_iters. On the cap the
/// best window's alpha is returned with converged = false. `rule` ends up
/// holding the returned alpha.
InitResult find_initialization(LearnedRule& rule, const UpdateRule& reference, PriorSet prior, const Vec& x0,
                               const InitConfig& cfg, Rng& rng);

struct LocateConfig {
  AdamConfig adam{1e-4};
  int decay_every = 5000;
  int n_max = 20000;
  int segment_len = 1;
  int target_len = 50;
  int check_every = 2000;
  int horizon = 50;  // iterations run when checking the sublevel constraint
};

struct ProgressRow {
  int step = 0;
  double ratio_loss = 0.0;
  bool accepted = true;
};

struct PriorLocation {
  Vec alpha;
  bool constraint_found = false;
  ProbabilityEstimate estimate;
  std::vector<ProgressRow> log;
  int checks = 0;
  int rollbacks = 0;
};

/// Constrained stochastic ERM on the ratio loss. Every check_every steps the
/// proposal's sublevel probability is estimated on the validation set; once a
/// point inside [p_lo, p_hi] has been found, proposals that leave the band are
/// rejected and alpha rolls back to the last accepted checkpoint. Adam moments
/// are kept across rollbacks. `rule` ends up holding the returned alpha.
PriorLocation locate_prior(LearnedRule& rule, PriorSet prior, ValSet val, const Vec& x0,
                           const SublevelSpec& spec, const LocateConfig& cfg, Rng& rng);

}  // namespace pacl2o
