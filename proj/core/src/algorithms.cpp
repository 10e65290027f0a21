#include "pacl2o/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pacl2o {

namespace {

Vec sign_of(const Vec& x) {
  return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

double logistic(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

void require_state(const IterState& s, const Problem& p) {
  if (s.x.size() != p.dim() || s.x_prev.size() != p.dim()) {
    throw std::invalid_argument("update step: state dimension does not match the problem");
  }
}

}  // namespace

IterState start_state(const Vec& x0) { return IterState{x0, x0, 1.0}; }

NormSplit split_norm(const Vec& v) {
  const double norm = v.norm();
  NormSplit out{Vec::Zero(v.size()), std::log1p(norm)};
  if (norm > 0.0) out.unit = v / norm;
  return out;
}

Preprocessed preprocess(const Vec& grad, const Vec& momentum) {
  if (grad.size() != momentum.size()) throw std::invalid_argument("preprocess: dimension mismatch");
  auto g = split_norm(grad);
  auto m = split_norm(momentum);
  return {std::move(g.unit), std::move(m.unit), g.log_norm, m.log_norm};
}

Vec soft_threshold(const Vec& v, double t) {
  if (t < 0.0) throw std::invalid_argument("soft_threshold: negative threshold");
  return v.unaryExpr([t](double vi) {
    if (vi > t) return vi - t;
    if (vi < -t) return vi + t;
    return 0.0;
  });
}

HbfParams hbf_params(double m_minus, double L_plus) {
  if (!(m_minus > 0.0 && L_plus >= m_minus)) {
    throw std::invalid_argument("hbf_params: need 0 < m_minus <= L_plus");
  }
  const double sm = std::sqrt(m_minus);
  const double sl = std::sqrt(L_plus);
  const double tau = 2.0 / (sl + sm);
  const double beta = (sl - sm) / (sl + sm);
  return {tau * tau, beta * beta};
}

IterState hbf_step(const HbfParams& params, const IterState& state, const Problem& problem) {
  require_state(state, problem);
  IterState next;
  next.x = state.x - params.tau * problem.gradient(state.x) + params.beta * (state.x - state.x_prev);
  next.x_prev = state.x;
  next.t = state.t;
  return next;
}

IterState gradient_step(double step_size, const IterState& state, const Problem& problem) {
  require_state(state, problem);
  return {state.x - step_size * problem.gradient(state.x), state.x, state.t};
}

IterState ista_step(const IterState& state, const Problem& problem) {
  require_state(state, problem);
  const auto& inst = problem.as_lasso();
  const auto& ctx = problem.context();
  const double tau = 1.0 / ctx.lipschitz;
  Vec x = soft_threshold(state.x - tau * smooth_grad_lasso(state.x, inst, ctx), tau * inst.reg);
  return {std::move(x), state.x, state.t};
}

IterState fista_step(const IterState& state, const Problem& problem) {
  require_state(state, problem);
  const auto& inst = problem.as_lasso();
  const auto& ctx = problem.context();
  const double tau = 1.0 / ctx.lipschitz;
  const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * state.t * state.t));
  const double beta = (state.t - 1.0) / t_next;
  const Vec y = state.x + beta * (state.x - state.x_prev);
  Vec x = soft_threshold(y - tau * smooth_grad_lasso(y, inst, ctx), tau * inst.reg);
  return {std::move(x), state.x, t_next};
}

Trajectory run_algorithm(const UpdateRule& rule, const Problem& problem, const Vec& x0, int k) {
  if (k < 0) throw std::invalid_argument("run_algorithm: negative iteration count");
  Trajectory traj;
  traj.points.reserve(static_cast<std::size_t>(k) + 1);
  traj.losses.reserve(static_cast<std::size_t>(k) + 1);
  IterState state = start_state(x0);
  traj.points.push_back(state.x);
  traj.losses.push_back(problem.loss(state.x));
  for (int i = 0; i < k; ++i) {
    state = rule.step(state, problem);
    traj.points.push_back(state.x);
    traj.losses.push_back(problem.loss(state.x));
  }
  return traj;
}

std::vector<double> run_losses(const UpdateRule& rule, const Problem& problem, const Vec& x0, int k) {
  if (k < 0) throw std::invalid_argument("run_losses: negative iteration count");
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(k) + 1);
  IterState state = start_state(x0);
  losses.push_back(problem.loss(state.x));
  for (int i = 0; i < k; ++i) {
    state = rule.step(state, problem);
    losses.push_back(problem.loss(state.x));
  }
  return losses;
}

IterState run_iterations(const UpdateRule& rule, const Problem& problem, IterState state, int k) {
  for (int i = 0; i < k; ++i) state = rule.step(state, problem);
  return state;
}

double final_loss(const UpdateRule& rule, const Problem& problem, const Vec& x0, int k) {
  return problem.loss(run_iterations(rule, problem, start_state(x0), k).x);
}

std::string to_string(Architecture arch) {
  return arch == Architecture::quadratic ? "quadratic" : "lasso";
}

Architecture architecture_from_string(const std::string& name) {
  if (name == "quadratic") return Architecture::quadratic;
  if (name == "lasso") return Architecture::lasso;
  throw std::invalid_argument("unknown architecture '" + name + "'");
}

void LearnedRule::set_parameters(const Vec& alpha) {
  if (alpha.size() != alpha_.size()) {
    throw std::invalid_argument("LearnedRule::set_parameters: expected " + std::to_string(alpha_.size()) +
                                " parameters, got " + std::to_string(alpha.size()));
  }
  if (!alpha.allFinite()) throw std::invalid_argument("LearnedRule::set_parameters: non-finite entry");
  alpha_ = alpha;
  unpack();
}

// ---------------------------------------------------------------------------
// Quadratic architecture

DenseNet LearnedQuadRule::make_direction_net() {
  // The paired linear layers without a rectifier in between mirror the
  // reference architecture.
  return DenseNet({3, 16, 16, 16, 16, 16, 1}, {true, false, true, false, true, false});
}

DenseNet LearnedQuadRule::make_step_net() {
  return DenseNet({2, 8, 8, 8, 8, 8, 1}, {true, false, true, false, true, false});
}

LearnedQuadRule::LearnedQuadRule()
    : LearnedRule(make_direction_net().parameter_count() + make_step_net().parameter_count()),
      direction_(make_direction_net()),
      step_(make_step_net()) {}

void LearnedQuadRule::unpack() {
  const std::size_t nd = direction_.parameter_count();
  direction_.set_parameters({alpha_.data(), nd});
  step_.set_parameters({alpha_.data() + nd, step_.parameter_count()});
}

void LearnedQuadRule::init_parameters(Rng& rng) {
  direction_.init_uniform(rng);
  step_.init_uniform(rng);
  const std::size_t nd = direction_.parameter_count();
  direction_.get_parameters({alpha_.data(), nd});
  step_.get_parameters({alpha_.data() + nd, step_.parameter_count()});
}

namespace {

Mat quad_channels(const Preprocessed& pre) {
  Mat c(3, pre.d1.size());
  c.row(0) = pre.d1.transpose();
  c.row(1) = pre.d2.transpose();
  c.row(2) = pre.d1.cwiseProduct(pre.d2).transpose();
  return c;
}

}  // namespace

IterState LearnedQuadRule::step(const IterState& state, const Problem& problem) const {
  require_state(state, problem);
  const Preprocessed pre = preprocess(problem.gradient(state.x), state.x - state.x_prev);
  const Mat dir = direction_.forward(quad_channels(pre));
  const double s = step_.forward(Vec((Vec(2) << pre.n1, pre.n2).finished()))[0];
  IterState next;
  next.x = state.x + s * dir.row(0).transpose();
  next.x_prev = state.x;
  next.t = state.t;
  return next;
}

Vec LearnedQuadRule::vjp(const IterState& state, const Problem& problem, const Vec& out_grad) const {
  require_state(state, problem);
  if (out_grad.size() != state.x.size()) throw std::invalid_argument("vjp: out_grad dimension mismatch");
  const Preprocessed pre = preprocess(problem.gradient(state.x), state.x - state.x_prev);
  GradTape dir_tape, step_tape;
  const Mat dir = direction_.forward(quad_channels(pre), &dir_tape);
  const double s = step_.forward(Vec((Vec(2) << pre.n1, pre.n2).finished()), &step_tape)[0];

  Vec grad = Vec::Zero(alpha_.size());
  const std::size_t nd = direction_.parameter_count();
  direction_.backward_accumulate(dir_tape, s * out_grad.transpose(), {grad.data(), nd});
  Mat ds(1, 1);
  ds(0, 0) = out_grad.dot(dir.row(0).transpose());
  step_.backward_accumulate(step_tape, ds, {grad.data() + nd, step_.parameter_count()});
  return grad;
}

// ---------------------------------------------------------------------------
// LASSO architecture

namespace {

DenseNet lasso_direction_net() { return DenseNet({4, 64, 64, 64, 1}, {true, true, true, false}); }
DenseNet lasso_step_net() { return DenseNet({3, 64, 64, 64, 1}, {true, true, true, false}); }
DenseNet lasso_sparsity_net() { return DenseNet({3, 64, 64, 64, 1}, {true, true, true, false}); }

}  // namespace

struct LearnedLassoRule::Forward {
  Vec d3;
  double s = 0.0;
  Vec dir;
  Vec x_tilde;
  Vec z;
  Vec u;
  double thresh = 0.0;
  Vec y;
  Vec out;
  GradTape dir_tape, step_tape, sparsity_tape;
};

LearnedLassoRule::LearnedLassoRule(double tau_unit)
    : LearnedRule(lasso_direction_net().parameter_count() + lasso_step_net().parameter_count() +
                  lasso_sparsity_net().parameter_count() + 1),
      tau_unit_(tau_unit),
      direction_(lasso_direction_net()),
      step_(lasso_step_net()),
      sparsity_(lasso_sparsity_net()) {
  if (!(tau_unit > 0.0)) throw std::invalid_argument("LearnedLassoRule: tau_unit must be positive");
}

double LearnedLassoRule::prox_tau() const noexcept {
  return std::max(alpha_[alpha_.size() - 1], 0.0) * tau_unit_;
}

void LearnedLassoRule::unpack() {
  std::size_t off = 0;
  direction_.set_parameters({alpha_.data() + off, direction_.parameter_count()});
  off += direction_.parameter_count();
  step_.set_parameters({alpha_.data() + off, step_.parameter_count()});
  off += step_.parameter_count();
  sparsity_.set_parameters({alpha_.data() + off, sparsity_.parameter_count()});
}

void LearnedLassoRule::init_parameters(Rng& rng) {
  direction_.init_uniform(rng);
  step_.init_uniform(rng);
  sparsity_.init_uniform(rng);
  std::size_t off = 0;
  direction_.get_parameters({alpha_.data() + off, direction_.parameter_count()});
  off += direction_.parameter_count();
  step_.get_parameters({alpha_.data() + off, step_.parameter_count()});
  off += step_.parameter_count();
  sparsity_.get_parameters({alpha_.data() + off, sparsity_.parameter_count()});
  alpha_[alpha_.size() - 1] = 1.0;
}

LearnedLassoRule::Forward LearnedLassoRule::run_forward(const IterState& state, const Problem& problem,
                                                        bool record) const {
  require_state(state, problem);
  const auto& inst = problem.as_lasso();
  const Index n = state.x.size();
  Forward f;

  const Preprocessed pre = preprocess(problem.gradient(state.x), state.x - state.x_prev);
  const NormSplit l1 = split_norm(inst.reg * sign_of(state.x));
  f.d3 = l1.unit;

  Mat channels(4, n);
  channels.row(0) = pre.d1.transpose();
  channels.row(1) = pre.d2.transpose();
  channels.row(2) = pre.d1.cwiseProduct(pre.d2).transpose();
  channels.row(3) = f.d3.transpose();
  f.dir = direction_.forward(channels, record ? &f.dir_tape : nullptr).row(0).transpose();
  f.s = step_.forward(Vec((Vec(3) << pre.n1, pre.n2, l1.log_norm).finished()),
                      record ? &f.step_tape : nullptr)[0];
  f.x_tilde = state.x + f.s * f.dir;

  Mat sp_in(3, n);
  sp_in.row(0) = f.x_tilde.transpose();
  sp_in.row(1) = state.x.transpose();
  sp_in.row(2) = f.d3.transpose();
  const Vec logits = sparsity_.forward(sp_in, record ? &f.sparsity_tape : nullptr).row(0).transpose();
  f.z = logits.unaryExpr([](double v) { return logistic(v); });
  f.u = f.z.cwiseProduct(f.x_tilde);
  f.thresh = prox_tau() * inst.reg;
  f.y = soft_threshold(f.u, f.thresh);

  const double ynorm = f.y.norm();
  f.out = ynorm > 0.0 ? Vec(f.y * (f.x_tilde.norm() / ynorm)) : f.y;
  return f;
}

IterState LearnedLassoRule::step(const IterState& state, const Problem& problem) const {
  Forward f = run_forward(state, problem, false);
  return {std::move(f.out), state.x, state.t};
}

Vec LearnedLassoRule::vjp(const IterState& state, const Problem& problem, const Vec& out_grad) const {
  if (out_grad.size() != state.x.size()) throw std::invalid_argument("vjp: out_grad dimension mismatch");
  const Forward f = run_forward(state, problem, true);
  const double reg = problem.as_lasso().reg;
  const Index n = state.x.size();

  // out = y * r / q with r = ||x_tilde||, q = ||y||
  Vec g_y = Vec::Zero(n);
  Vec g_xt = Vec::Zero(n);
  const double q = f.y.norm();
  const double r = f.x_tilde.norm();
  if (q > 0.0) {
    const double yg = f.y.dot(out_grad);
    g_y = (r / q) * (out_grad - f.y * (yg / (q * q)));
    if (r > 0.0) g_xt += (yg / q) * (f.x_tilde / r);
  }

  // y = soft_threshold(u, thresh)
  Vec g_u = Vec::Zero(n);
  double g_thresh = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (std::abs(f.u[i]) > f.thresh) {
      g_u[i] = g_y[i];
      g_thresh -= g_y[i] * (f.u[i] > 0.0 ? 1.0 : -1.0);
    }
  }

  Vec grad = Vec::Zero(alpha_.size());
  const std::size_t nd = direction_.parameter_count();
  const std::size_t ns = step_.parameter_count();
  const std::size_t nz = sparsity_.parameter_count();

  if (alpha_[alpha_.size() - 1] > 0.0) grad[grad.size() - 1] = g_thresh * reg * tau_unit_;

  // u = z * x_tilde, z = logistic(logits)
  g_xt += g_u.cwiseProduct(f.z);
  const Vec g_logits = g_u.cwiseProduct(f.x_tilde).cwiseProduct(f.z).cwiseProduct(
      (Vec::Ones(n) - f.z));
  const Mat g_sp_in =
      sparsity_.backward_accumulate(f.sparsity_tape, g_logits.transpose(), {grad.data() + nd + ns, nz});
  g_xt += g_sp_in.row(0).transpose();

  // x_tilde = x + s * dir
  direction_.backward_accumulate(f.dir_tape, f.s * g_xt.transpose(), {grad.data(), nd});
  Mat g_s(1, 1);
  g_s(0, 0) = g_xt.dot(f.dir);
  step_.backward_accumulate(f.step_tape, g_s, {grad.data() + nd, ns});
  return grad;
}

std::unique_ptr<LearnedRule> make_learned_rule(Architecture arch, double tau_unit) {
  if (arch == Architecture::quadratic) return std::make_unique<LearnedQuadRule>();
  return std::make_unique<LearnedLassoRule>(tau_unit);
}

std::optional<double> train_loss_onestep(const LearnedRule& rule, const Problem& problem,
                                         const IterState& state) {
  const double denom = problem.loss(state.x);
  if (!(denom > 0.0)) return std::nullopt;
  return problem.loss(rule.step(state, problem).x) / denom;
}

std::optional<Vec> grad_train_loss_onestep(const LearnedRule& rule, const Problem& problem,
                                           const IterState& state) {
  const double denom = problem.loss(state.x);
  if (!(denom > 0.0)) return std::nullopt;
  const IterState next = rule.step(state, problem);
  const Vec g = problem.gradient(next.x) / denom;
  return rule.vjp(state, problem, g);
}

}  // namespace pacl2o
