#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pacl2o/problems.hpp"
#include "pacl2o/tensor.hpp"

namespace pacl2o {

// Iterate plus the history an update may look at. `t` is only used by FISTA.
struct IterState {
  Vec x;
  Vec x_prev;
  double t = 1.0;
};

/// x = x_prev = x0 (zero momentum), t = 1.
IterState start_state(const Vec& x0);

class UpdateRule {
 public:
  virtual ~UpdateRule() = default;
  virtual IterState step(const IterState& state, const Problem& problem) const = 0;
  virtual std::string name() const = 0;
};

struct NormSplit {
  Vec unit;         // v / ||v||, or zero when v = 0
  double log_norm;  // log(1 + ||v||)
};

NormSplit split_norm(const Vec& v);

struct Preprocessed {
  Vec d1, d2;
  double n1 = 0.0, n2 = 0.0;
};

/// Unit directions and log-norms of the gradient and the momentum x_k - x_{k-1}.
Preprocessed preprocess(const Vec& grad, const Vec& momentum);

/// Coordinate-wise v_i - t sign(v_i) if |v_i| > t, else 0.
Vec soft_threshold(const Vec& v, double t);

// ---------------------------------------------------------------------------
// Baselines

struct HbfParams {
  double tau = 0.0;
  double beta = 0.0;
};

/// Worst-case optimal heavy-ball parameters for an m_minus-strongly convex,
/// L_plus-smooth class.
HbfParams hbf_params(double m_minus, double L_plus);

IterState hbf_step(const HbfParams& params, const IterState& state, const Problem& problem);
IterState gradient_step(double step_size, const IterState& state, const Problem& problem);
/// Proximal gradient step with tau = 1 / lipschitz of the LASSO class.
IterState ista_step(const IterState& state, const Problem& problem);
/// Extrapolated proximal gradient step; state.t holds t_k and is advanced.
IterState fista_step(const IterState& state, const Problem& problem);

class HeavyBall final : public UpdateRule {
 public:
  explicit HeavyBall(HbfParams params) : params_(params) {}
  IterState step(const IterState& s, const Problem& p) const override { return hbf_step(params_, s, p); }
  std::string name() const override { return "hbf"; }
  const HbfParams& params() const noexcept { return params_; }

 private:
  HbfParams params_;
};

class GradientDescent final : public UpdateRule {
 public:
  explicit GradientDescent(double step_size) : step_size_(step_size) {}
  IterState step(const IterState& s, const Problem& p) const override {
    return gradient_step(step_size_, s, p);
  }
  std::string name() const override { return "gd"; }

 private:
  double step_size_;
};

class Ista final : public UpdateRule {
 public:
  IterState step(const IterState& s, const Problem& p) const override { return ista_step(s, p); }
  std::string name() const override { return "ista"; }
};

class Fista final : public UpdateRule {
 public:
  IterState step(const IterState& s, const Problem& p) const override { return fista_step(s, p); }
  std::string name() const override { return "fista"; }
};

struct Trajectory {
  std::vector<Vec> points;     // k + 1 entries, points[0] = x0
  std::vector<double> losses;  // loss at each point
};

Trajectory run_algorithm(const UpdateRule& rule, const Problem& problem, const Vec& x0, int k);
/// Losses only; avoids storing the iterates.
std::vector<double> run_losses(const UpdateRule& rule, const Problem& problem, const Vec& x0, int k);
IterState run_iterations(const UpdateRule& rule, const Problem& problem, IterState state, int k);
double final_loss(const UpdateRule& rule, const Problem& problem, const Vec& x0, int k);

// ---------------------------------------------------------------------------
// Learned update rules

enum class Architecture { quadratic, lasso };

std::string to_string(Architecture arch);
Architecture architecture_from_string(const std::string& name);

// Update rule whose behaviour is fixed by a flat hyperparameter vector alpha.
class LearnedRule : public UpdateRule {
 public:
  virtual Architecture architecture() const noexcept = 0;
  virtual std::unique_ptr<LearnedRule> clone() const = 0;

  std::size_t parameter_count() const noexcept { return static_cast<std::size_t>(alpha_.size()); }
  const Vec& parameters() const noexcept { return alpha_; }
  void set_parameters(const Vec& alpha);

  /// Random net weights (uniform fan-in init) and architecture defaults elsewhere.
  virtual void init_parameters(Rng& rng) = 0;

  /// Gradient w.r.t. alpha of <out_grad, step(state, problem).x>. Quantities
  /// computed from state (directions, norms) are held fixed.
  virtual Vec vjp(const IterState& state, const Problem& problem, const Vec& out_grad) const = 0;

 protected:
  explicit LearnedRule(std::size_t n) : alpha_(Vec::Zero(static_cast<Index>(n))) {}
  virtual void unpack() = 0;

  Vec alpha_;
};

// Direction net over per-coordinate channels (d1, d2, d1*d2), 3-16-16-16-16-16-1
// with rectifiers after layers 1, 3, 5; step net over (n1, n2) with the same
// pattern at width 8. x_{k+1} = x_k + s * d.
class LearnedQuadRule final : public LearnedRule {
 public:
  LearnedQuadRule();

  Architecture architecture() const noexcept override { return Architecture::quadratic; }
  std::unique_ptr<LearnedRule> clone() const override { return std::make_unique<LearnedQuadRule>(*this); }
  std::string name() const override { return "learned-quadratic"; }
  void init_parameters(Rng& rng) override;

  IterState step(const IterState& state, const Problem& problem) const override;
  Vec vjp(const IterState& state, const Problem& problem, const Vec& out_grad) const override;

  const DenseNet& direction_net() const noexcept { return direction_; }
  const DenseNet& step_net() const noexcept { return step_; }

  static DenseNet make_direction_net();
  static DenseNet make_step_net();

 protected:
  void unpack() override;

 private:
  DenseNet direction_;
  DenseNet step_;
};

// LASSO rule: direction net over (d1, d2, d1*d2, d3), step net over (n1, n2, n3),
// sparsity net over (x_tilde, x, d3) squashed to (0, 1), then soft-thresholding
// with threshold tau * reg and rescaling back to ||x_tilde||. The prox parameter
// is stored as the last entry of alpha in units of `tau_unit`.
class LearnedLassoRule final : public LearnedRule {
 public:
  /// tau_unit is typically 1 / lipschitz; tau = max(alpha_last, 0) * tau_unit.
  explicit LearnedLassoRule(double tau_unit = 1.0);

  Architecture architecture() const noexcept override { return Architecture::lasso; }
  std::unique_ptr<LearnedRule> clone() const override { return std::make_unique<LearnedLassoRule>(*this); }
  std::string name() const override { return "learned-lasso"; }
  /// Random net weights and tau = tau_unit.
  void init_parameters(Rng& rng) override;

  IterState step(const IterState& state, const Problem& problem) const override;
  Vec vjp(const IterState& state, const Problem& problem, const Vec& out_grad) const override;

  double tau_unit() const noexcept { return tau_unit_; }
  double prox_tau() const noexcept;

  const DenseNet& direction_net() const noexcept { return direction_; }
  const DenseNet& step_net() const noexcept { return step_; }
  const DenseNet& sparsity_net() const noexcept { return sparsity_; }

 protected:
  void unpack() override;

 private:
  struct Forward;
  Forward run_forward(const IterState& state, const Problem& problem, bool record) const;

  double tau_unit_;
  DenseNet direction_;
  DenseNet step_;
  DenseNet sparsity_;
};

/// tau_unit only matters for the LASSO architecture.
std::unique_ptr<LearnedRule> make_learned_rule(Architecture arch, double tau_unit = 1.0);

/// loss(x_{k+1}) / loss(x_k) for one learned step, or nullopt when loss(x_k) = 0.
std::optional<double> train_loss_onestep(const LearnedRule& rule, const Problem& problem,
                                         const IterState& state);

/// Exact gradient of train_loss_onestep w.r.t. alpha with the step inputs held
/// fixed; nullopt when loss(x_k) = 0 (the term is dropped from the ratio loss).
std::optional<Vec> grad_train_loss_onestep(const LearnedRule& rule, const Problem& problem,
                                           const IterState& state);

}  // namespace pacl2o
