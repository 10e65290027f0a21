#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pacl2o/types.hpp"

namespace pacl2o {

// Activations recorded by a forward pass. inputs[l] is the input of layer l,
// preacts[l] its output before the optional rectifier. Columns are samples.
struct GradTape {
  std::vector<Mat> inputs;
  std::vector<Mat> preacts;
};

struct NetGradients {
  Mat input;                   // d loss / d input, same shape as the forward input
  std::vector<RowMat> weights;  // one per layer, same shape as the weight
};

// Feed-forward net of bias-free linear layers, each optionally followed by a
// rectifier. Applying it to a (channels x n) matrix evaluates it independently
// on every column, which is how 1x1 convolutions over coordinates are realized.
class DenseNet {
 public:
  DenseNet() = default;
  /// widths = {in, h1, ..., out}; rectify[l] applies max(0, .) after layer l.
  DenseNet(std::vector<Index> widths, std::vector<bool> rectify);

  Index in_dim() const noexcept { return widths_.front(); }
  Index out_dim() const noexcept { return widths_.back(); }
  std::size_t layer_count() const noexcept { return weights_.size(); }
  const std::vector<Index>& widths() const noexcept { return widths_; }
  const std::vector<bool>& rectify() const noexcept { return rectify_; }
  const RowMat& weight(std::size_t layer) const { return weights_.at(layer); }
  RowMat& weight(std::size_t layer) { return weights_.at(layer); }

  std::size_t parameter_count() const noexcept { return param_count_; }
  /// Row-major per layer, layers in order.
  void set_parameters(std::span<const double> params);
  void get_parameters(std::span<double> out) const;

  /// Entries ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)].
  void init_uniform(Rng& rng);

  Mat forward(const Mat& input, GradTape* tape = nullptr) const;
  Vec forward(const Vec& input, GradTape* tape = nullptr) const;

  /// Reverse pass for a tape produced by forward() on this net. The rectifier
  /// derivative at exactly zero is taken as zero.
  NetGradients backward(const GradTape& tape, const Mat& out_grad) const;

  /// Same as backward() but adds the flattened weight gradients into `accum`
  /// (layout of get_parameters) and returns only the input gradient.
  Mat backward_accumulate(const GradTape& tape, const Mat& out_grad, std::span<double> accum) const;

 private:
  std::vector<Index> widths_{0};
  std::vector<bool> rectify_;
  std::vector<RowMat> weights_;  // layer l maps widths_[l] -> widths_[l+1]
  std::size_t param_count_ = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vec first_moment;
  Vec second_moment;
  std::int64_t step_count = 0;
  AdamConfig config;

  AdamState() = default;
  AdamState(std::size_t n, const AdamConfig& cfg);
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, Vec& params, const Vec& grads);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
Vec finite_diff(const std::function<double(const Vec&)>& f, const Vec& x, double h);

/// Central difference along `direction`.
double directional_diff(const std::function<double(const Vec&)>& f, const Vec& x, const Vec& direction,
                        double h);

}  // namespace pacl2o
