#include "pacl2o/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pacl2o {

DenseNet::DenseNet(std::vector<Index> widths, std::vector<bool> rectify)
    : widths_(std::move(widths)), rectify_(std::move(rectify)) {
  if (widths_.size() < 2) throw std::invalid_argument("DenseNet: need at least one layer");
  if (rectify_.size() != widths_.size() - 1) {
    throw std::invalid_argument("DenseNet: one rectifier flag per layer expected");
  }
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] < 1 || widths_[l + 1] < 1) throw std::invalid_argument("DenseNet: empty layer");
    weights_.emplace_back(RowMat::Zero(widths_[l + 1], widths_[l]));
    param_count_ += static_cast<std::size_t>(widths_[l + 1] * widths_[l]);
  }
}

void DenseNet::set_parameters(std::span<const double> params) {
  if (params.size() != param_count_) {
    throw std::invalid_argument("DenseNet::set_parameters: expected " + std::to_string(param_count_) +
                                " values, got " + std::to_string(params.size()));
  }
  std::size_t off = 0;
  for (auto& w : weights_) {
    const auto n = static_cast<std::size_t>(w.size());
    w = Eigen::Map<const RowMat>(params.data() + off, w.rows(), w.cols());
    off += n;
  }
}

void DenseNet::get_parameters(std::span<double> out) const {
  if (out.size() != param_count_) throw std::invalid_argument("DenseNet::get_parameters: size mismatch");
  std::size_t off = 0;
  for (const auto& w : weights_) {
    Eigen::Map<RowMat>(out.data() + off, w.rows(), w.cols()) = w;
    off += static_cast<std::size_t>(w.size());
  }
}

void DenseNet::init_uniform(Rng& rng) {
  for (auto& w : weights_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> unif(-bound, bound);
    for (Index i = 0; i < w.rows(); ++i)
      for (Index j = 0; j < w.cols(); ++j) w(i, j) = unif(rng);
  }
}

Mat DenseNet::forward(const Mat& input, GradTape* tape) const {
  if (input.rows() != in_dim()) {
    throw std::invalid_argument("DenseNet::forward: input has " + std::to_string(input.rows()) +
                                " channels, expected " + std::to_string(in_dim()));
  }
  if (tape) {
    tape->inputs.clear();
    tape->preacts.clear();
  }
  Mat h = input;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Mat z = weights_[l] * h;
    if (tape) {
      tape->inputs.push_back(std::move(h));
      tape->preacts.push_back(z);
    }
    h = rectify_[l] ? Mat(z.cwiseMax(0.0)) : std::move(z);
  }
  return h;
}

Vec DenseNet::forward(const Vec& input, GradTape* tape) const {
  return forward(Mat(input), tape).col(0);
}

NetGradients DenseNet::backward(const GradTape& tape, const Mat& out_grad) const {
  NetGradients g;
  g.weights.resize(weights_.size());
  std::vector<double> flat(param_count_, 0.0);
  g.input = backward_accumulate(tape, out_grad, flat);
  std::size_t off = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights[l] = Eigen::Map<const RowMat>(flat.data() + off, weights_[l].rows(), weights_[l].cols());
    off += static_cast<std::size_t>(weights_[l].size());
  }
  return g;
}

Mat DenseNet::backward_accumulate(const GradTape& tape, const Mat& out_grad, std::span<double> accum) const {
  if (tape.inputs.size() != weights_.size() || tape.preacts.size() != weights_.size()) {
    throw std::invalid_argument("DenseNet::backward: tape does not match the net");
  }
  if (accum.size() != param_count_) throw std::invalid_argument("DenseNet::backward: accumulator size");
  const Index batch = tape.inputs.front().cols();
  if (out_grad.rows() != out_dim() || out_grad.cols() != batch) {
    throw std::invalid_argument("DenseNet::backward: out_grad shape mismatch");
  }

  std::vector<std::size_t> offsets(weights_.size());
  std::size_t off = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    offsets[l] = off;
    off += static_cast<std::size_t>(weights_[l].size());
  }

  Mat delta = out_grad;
  for (std::size_t l = weights_.size(); l-- > 0;) {
    if (rectify_[l]) {
      delta = delta.cwiseProduct(tape.preacts[l].unaryExpr([](double z) { return z > 0.0 ? 1.0 : 0.0; }));
    }
    Eigen::Map<RowMat> gw(accum.data() + offsets[l], weights_[l].rows(), weights_[l].cols());
    gw.noalias() += delta * tape.inputs[l].transpose();
    delta = weights_[l].transpose() * delta;
  }
  return delta;
}

AdamState::AdamState(std::size_t n, const AdamConfig& cfg)
    : first_moment(Vec::Zero(static_cast<Index>(n))),
      second_moment(Vec::Zero(static_cast<Index>(n))),
      config(cfg) {}

void adam_step(AdamState& state, Vec& params, const Vec& grads) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: length mismatch");
  }
  const auto& c = state.config;
  ++state.step_count;
  state.first_moment = c.beta1 * state.first_moment + (1.0 - c.beta1) * grads;
  state.second_moment = c.beta2 * state.second_moment + (1.0 - c.beta2) * grads.cwiseAbs2();
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  params.array() -= c.lr * (state.first_moment.array() / bc1) /
                    ((state.second_moment.array() / bc2).sqrt() + c.eps);
}

Vec finite_diff(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  Vec probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double xi = probe[i];
    probe[i] = xi + h;
    const double up = f(probe);
    probe[i] = xi - h;
    const double down = f(probe);
    probe[i] = xi;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double directional_diff(const std::function<double(const Vec&)>& f, const Vec& x, const Vec& direction,
                        double h) {
  return (f(x + h * direction) - f(x - h * direction)) / (2.0 * h);
}

}  // namespace pacl2o
