#include "pacl2o/problems.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pacl2o {

namespace {

void require_dim(Index got, Index want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(got) +
                                " vs " + std::to_string(want) + ")");
  }
}

Vec sign_of(const Vec& x) {
  return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

struct RhsGaussian {
  Vec mean;
  Mat factor;  // C, covariance is C^T C

  Vec draw(Rng& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec z(mean.size());
    for (Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    return mean + factor.transpose() * z;
  }
};

RhsGaussian draw_rhs_gaussian(Index dim, Rng& rng) {
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  RhsGaussian g{Vec(dim), Mat(dim, dim)};
  for (Index i = 0; i < dim; ++i) g.mean[i] = unif(rng);
  for (Index i = 0; i < dim; ++i)
    for (Index k = 0; k < dim; ++k) g.factor(i, k) = unif(rng);
  return g;
}

}  // namespace

double loss_quadratic(const Vec& x, const QuadraticInstance& inst) {
  require_dim(x.size(), inst.diag.size(), "loss_quadratic");
  require_dim(inst.rhs.size(), inst.diag.size(), "loss_quadratic");
  return 0.5 * (inst.diag.cwiseProduct(x) - inst.rhs).squaredNorm();
}

Vec grad_quadratic(const Vec& x, const QuadraticInstance& inst) {
  require_dim(x.size(), inst.diag.size(), "grad_quadratic");
  require_dim(inst.rhs.size(), inst.diag.size(), "grad_quadratic");
  return inst.diag.cwiseProduct(inst.diag.cwiseProduct(x) - inst.rhs);
}

double loss_lasso(const Vec& x, const LassoInstance& inst, const LassoClassContext& ctx) {
  require_dim(x.size(), ctx.design.cols(), "loss_lasso");
  require_dim(inst.rhs.size(), ctx.design.rows(), "loss_lasso");
  return 0.5 * (ctx.design * x - inst.rhs).squaredNorm() + inst.reg * x.lpNorm<1>();
}

Vec smooth_grad_lasso(const Vec& x, const LassoInstance& inst, const LassoClassContext& ctx) {
  require_dim(x.size(), ctx.design.cols(), "smooth_grad_lasso");
  require_dim(inst.rhs.size(), ctx.design.rows(), "smooth_grad_lasso");
  return ctx.design.transpose() * (ctx.design * x - inst.rhs);
}

Vec subgrad_lasso(const Vec& x, const LassoInstance& inst, const LassoClassContext& ctx) {
  return smooth_grad_lasso(x, inst, ctx) + inst.reg * sign_of(x);
}

double gram_spectral_norm(const Mat& design, double rel_tol, int max_iters) {
  const Index n = design.cols();
  if (n == 0 || design.rows() == 0) throw std::invalid_argument("gram_spectral_norm: empty matrix");
  Vec v = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
  double eig = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vec w = design.transpose() * (design * v);
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (it > 0 && std::abs(next - eig) <= rel_tol * std::abs(next)) {
      eig = next;
      // Rayleigh quotient at the converged vector
      return v.dot(design.transpose() * (design * v));
    }
    eig = next;
  }
  return eig;
}

void QuadraticClassConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("quadratic class: dim must be >= 1");
  if (!(m_lo > 0.0 && m_lo <= m_hi && m_hi <= L_lo && L_lo <= L_hi)) {
    throw std::invalid_argument("quadratic class: need 0 < m_lo <= m_hi <= L_lo <= L_hi");
  }
}

void LassoClassConfig::validate() const {
  if (dim < 1 || rows < 1 || rows > dim) {
    throw std::invalid_argument("lasso class: need 1 <= rows <= dim");
  }
  if (!(reg_lo > 0.0 && reg_lo < reg_hi)) {
    throw std::invalid_argument("lasso class: need 0 < reg_lo < reg_hi");
  }
}

std::vector<QuadraticInstance> gen_quadratics(std::size_t count, const QuadraticClassConfig& cfg,
                                              std::uint64_t seed) {
  cfg.validate();
  const Index n = cfg.dim;
  Rng class_rng = make_rng(seed, 0);
  const RhsGaussian rhs_dist = draw_rhs_gaussian(n, class_rng);

  std::vector<QuadraticInstance> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    Rng rng = make_rng(seed, j + 1);
    const double m = std::uniform_real_distribution<double>(cfg.m_lo, cfg.m_hi)(rng);
    const double L = std::uniform_real_distribution<double>(cfg.L_lo, cfg.L_hi)(rng);
    const double lo = std::sqrt(m);
    const double hi = std::sqrt(L);
    QuadraticInstance inst;
    inst.diag.resize(n);
    // Endpoint-exact interpolation: diag[0]^2 = m and diag[n-1]^2 = L. A single
    // coordinate keeps the lower endpoint.
    for (Index i = 0; i < n; ++i) {
      inst.diag[i] = n == 1 ? lo : lo + static_cast<double>(i) * (hi - lo) / static_cast<double>(n - 1);
    }
    if (n > 1) inst.diag[n - 1] = hi;
    inst.rhs = rhs_dist.draw(rng);
    out.push_back(std::move(inst));
  }
  return out;
}

LassoData gen_lasso(std::size_t count, const LassoClassConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng class_rng = make_rng(seed, 0);
  LassoData data;
  data.context.design.resize(cfg.rows, cfg.dim);
  std::uniform_real_distribution<double> entry(-10.0, 10.0);
  for (Index i = 0; i < cfg.rows; ++i)
    for (Index j = 0; j < cfg.dim; ++j) data.context.design(i, j) = entry(class_rng);
  data.context.lipschitz = gram_spectral_norm(data.context.design, 1e-12);
  const RhsGaussian rhs_dist = draw_rhs_gaussian(cfg.rows, class_rng);

  data.instances.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    Rng rng = make_rng(seed, j + 1);
    LassoInstance inst;
    inst.reg = std::uniform_real_distribution<double>(cfg.reg_lo, cfg.reg_hi)(rng);
    inst.rhs = rhs_dist.draw(rng);
    data.instances.push_back(std::move(inst));
  }
  return data;
}

Problem Problem::quadratic(QuadraticInstance inst) {
  if (inst.diag.size() != inst.rhs.size()) {
    throw std::invalid_argument("Problem::quadratic: diag and rhs differ in length");
  }
  Problem p;
  p.inst_ = std::move(inst);
  return p;
}

Problem Problem::lasso(LassoInstance inst, std::shared_ptr<const LassoClassContext> ctx) {
  if (!ctx) throw std::invalid_argument("Problem::lasso: missing class context");
  if (inst.rhs.size() != ctx->design.rows()) {
    throw std::invalid_argument("Problem::lasso: rhs length does not match design rows");
  }
  Problem p;
  p.inst_ = std::move(inst);
  p.ctx_ = std::move(ctx);
  return p;
}

ProblemKind Problem::kind() const noexcept {
  return std::holds_alternative<QuadraticInstance>(inst_) ? ProblemKind::quadratic : ProblemKind::lasso;
}

Index Problem::dim() const noexcept {
  if (const auto* q = std::get_if<QuadraticInstance>(&inst_)) return q->diag.size();
  return ctx_->design.cols();
}

double Problem::loss(const Vec& x) const {
  if (const auto* q = std::get_if<QuadraticInstance>(&inst_)) return loss_quadratic(x, *q);
  return loss_lasso(x, std::get<LassoInstance>(inst_), *ctx_);
}

Vec Problem::gradient(const Vec& x) const {
  if (const auto* q = std::get_if<QuadraticInstance>(&inst_)) return grad_quadratic(x, *q);
  return subgrad_lasso(x, std::get<LassoInstance>(inst_), *ctx_);
}

const QuadraticInstance& Problem::as_quadratic() const {
  if (const auto* q = std::get_if<QuadraticInstance>(&inst_)) return *q;
  throw std::logic_error("Problem: not a quadratic instance");
}

const LassoInstance& Problem::as_lasso() const {
  if (const auto* l = std::get_if<LassoInstance>(&inst_)) return *l;
  throw std::logic_error("Problem: not a LASSO instance");
}

const LassoClassContext& Problem::context() const {
  if (!ctx_) throw std::logic_error("Problem: no class context");
  return *ctx_;
}

DatasetSplit split_dataset(std::span<const Problem> instances, const SplitSizes& sizes) {
  if (sizes.total() > instances.size()) {
    throw std::invalid_argument("split_dataset: requested " + std::to_string(sizes.total()) +
                                " instances but only " + std::to_string(instances.size()) +
                                " available");
  }
  DatasetSplit split;
  auto it = instances.begin();
  auto take = [&it](std::size_t n) {
    std::vector<Problem> part(it, it + static_cast<std::ptrdiff_t>(n));
    it += static_cast<std::ptrdiff_t>(n);
    return part;
  };
  split.prior = take(sizes.prior);
  split.train = take(sizes.train);
  split.val = take(sizes.val);
  split.test = take(sizes.test);
  return split;
}

}  // namespace pacl2o
