#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "pacl2o/types.hpp"

namespace pacl2o {

// min 0.5 * ||diag(a) x - b||^2. Entries of `diag` are nondecreasing and positive.
struct QuadraticInstance {
  Vec diag;
  Vec rhs;
};

// min 0.5 * ||A x - b||^2 + reg * ||x||_1, with A shared through LassoClassContext.
struct LassoInstance {
  Vec rhs;
  double reg = 0.0;
};

struct LassoClassContext {
  Mat design;              // p x n
  double lipschitz = 0.0;  // largest eigenvalue of design^T design
};

double loss_quadratic(const Vec& x, const QuadraticInstance& inst);
Vec grad_quadratic(const Vec& x, const QuadraticInstance& inst);

double loss_lasso(const Vec& x, const LassoInstance& inst, const LassoClassContext& ctx);
/// Subgradient A^T(Ax - b) + reg * sign(x) with sign(0) = 0.
Vec subgrad_lasso(const Vec& x, const LassoInstance& inst, const LassoClassContext& ctx);
/// Gradient of the smooth part only, A^T(Ax - b).
Vec smooth_grad_lasso(const Vec& x, const LassoInstance& inst, const LassoClassContext& ctx);

/// Largest eigenvalue of A^T A by power iteration, stopped at relative change `rel_tol`.
double gram_spectral_norm(const Mat& design, double rel_tol = 1e-8, int max_iters = 100000);

struct QuadraticClassConfig {
  Index dim = 20;
  double m_lo = 0.001;
  double m_hi = 0.01;
  double L_lo = 10.0;
  double L_hi = 100.0;

  void validate() const;
};

struct LassoClassConfig {
  Index dim = 40;   // n, columns of the design
  Index rows = 40;  // p
  double reg_lo = 0.01;
  double reg_hi = 0.5;

  void validate() const;
};

/// Instances are a pure function of (config, seed). The rhs Gaussian N(mu, C^T C)
/// is drawn once from stream 0 and shared by all instances; instance j uses stream j + 1.
std::vector<QuadraticInstance> gen_quadratics(std::size_t count, const QuadraticClassConfig& cfg,
                                              std::uint64_t seed);

struct LassoData {
  LassoClassContext context;
  std::vector<LassoInstance> instances;
};

LassoData gen_lasso(std::size_t count, const LassoClassConfig& cfg, std::uint64_t seed);

enum class ProblemKind { quadratic, lasso };

// One problem instance bound to its class context. Cheap to copy: the LASSO
// design matrix is shared.
class Problem {
 public:
  static Problem quadratic(QuadraticInstance inst);
  static Problem lasso(LassoInstance inst, std::shared_ptr<const LassoClassContext> ctx);

  ProblemKind kind() const noexcept;
  Index dim() const noexcept;

  double loss(const Vec& x) const;
  Vec gradient(const Vec& x) const;

  const QuadraticInstance& as_quadratic() const;
  const LassoInstance& as_lasso() const;
  const LassoClassContext& context() const;
  const std::shared_ptr<const LassoClassContext>& shared_context() const noexcept { return ctx_; }

 private:
  std::variant<QuadraticInstance, LassoInstance> inst_;
  std::shared_ptr<const LassoClassContext> ctx_;
};

enum class SplitRole { prior, train, val, test };

// Read-only view of one part of the dataset. Stages take the role they are
// allowed to see, so test data cannot reach training or the bound by accident.
template <SplitRole Role>
class SplitView {
 public:
  SplitView() = default;
  explicit SplitView(std::span<const Problem> items) : items_(items) {}

  std::span<const Problem> items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const Problem& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const noexcept { return items_.begin(); }
  auto end() const noexcept { return items_.end(); }

 private:
  std::span<const Problem> items_;
};

using PriorSet = SplitView<SplitRole::prior>;
using TrainSet = SplitView<SplitRole::train>;
using ValSet = SplitView<SplitRole::val>;
using TestSet = SplitView<SplitRole::test>;

struct SplitSizes {
  std::size_t prior = 0;
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;

  std::size_t total() const noexcept { return prior + train + val + test; }
};

struct DatasetSplit {
  std::vector<Problem> prior;
  std::vector<Problem> train;
  std::vector<Problem> val;
  std::vector<Problem> test;

  PriorSet prior_set() const { return PriorSet(prior); }
  TrainSet train_set() const { return TrainSet(train); }
  ValSet val_set() const { return ValSet(val); }
  TestSet test_set() const { return TestSet(test); }
  SplitSizes sizes() const { return {prior.size(), train.size(), val.size(), test.size()}; }
};

/// Contiguous slices prior | train | val | test of the input prefix.
DatasetSplit split_dataset(std::span<const Problem> instances, const SplitSizes& sizes);

}  // namespace pacl2o
