#pragma once

// Dense feed-forward networks over a flat parameter vector, with exact
// reverse-mode gradients for both parameters and inputs.
//
// Batches are column-major: every column of an input matrix is one sample.
//
// Canonical flat layout, per layer in order: the weight matrix (n_out x n_in)
// stored row-major, followed by the bias vector (n_out). The hypernetwork
// emits target-network parameters in exactly this layout.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hlearner/rng.hpp"

namespace hl {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowMajorMatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Hidden-layer nonlinearity. The output layer is always linear.
enum class Activation { ELU, Identity };

std::string to_string(Activation a);
Activation activation_from_string(std::string_view name);

class NetShape {
 public:
  NetShape(std::vector<Index> layer_sizes, Activation hidden = Activation::ELU);

  const std::vector<Index>& layer_sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  Index input_width() const { return sizes_.front(); }
  Index output_width() const { return sizes_.back(); }
  /// Number of affine layers.
  Index depth() const { return static_cast<Index>(sizes_.size()) - 1; }

  bool operator==(const NetShape&) const = default;

 private:
  std::vector<Index> sizes_;
  Activation activation_;
};

Index param_count(const NetShape& shape);

/// Offsets of one affine layer inside the flat parameter vector.
struct LayerSlice {
  Index weight_offset;
  Index bias_offset;
  Index n_in;
  Index n_out;
};

LayerSlice layer_slice(const NetShape& shape, Index layer);

template <typename Scalar>
Scalar elu(Scalar z) {
  return z >= Scalar(0) ? z : std::expm1(z);
}

template <typename Scalar>
Scalar elu_derivative(Scalar z) {
  return z >= Scalar(0) ? Scalar(1) : std::exp(z);
}

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

template <typename Scalar>
std::uint64_t digest(std::span<const Scalar> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  for (std::size_t i = 0; i < values.size_bytes(); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename Scalar>
auto weights(const NetShape& shape, const Scalar* params, Index layer) {
  const LayerSlice s = layer_slice(shape, layer);
  return Eigen::Map<const RowMajorMatrixX<Scalar>>(params + s.weight_offset, s.n_out, s.n_in);
}

template <typename Scalar>
auto bias(const NetShape& shape, const Scalar* params, Index layer) {
  const LayerSlice s = layer_slice(shape, layer);
  return Eigen::Map<const VectorX<Scalar>>(params + s.bias_offset, s.n_out);
}

template <typename Params>
void check_params(const NetShape& shape, const Params& params) {
  require(params.size() == param_count(shape),
          "parameter vector has length " + std::to_string(params.size()) + ", shape expects " +
              std::to_string(param_count(shape)));
}

template <typename Input>
void check_input(const NetShape& shape, const Input& input) {
  require(input.rows() == shape.input_width(),
          "input has " + std::to_string(input.rows()) + " rows, network expects " +
              std::to_string(shape.input_width()));
}

}  // namespace detail

/// Glorot-uniform weights, zero biases. Deterministic in `seed`.
template <typename Scalar = double>
VectorX<Scalar> init_params(const NetShape& shape, std::uint64_t seed) {
  VectorX<Scalar> params = VectorX<Scalar>::Zero(param_count(shape));
  CounterStream rng(seed, 0x1a1e);
  for (Index l = 0; l < shape.depth(); ++l) {
    const LayerSlice s = layer_slice(shape, l);
    const double limit = std::sqrt(6.0 / static_cast<double>(s.n_in + s.n_out));
    for (Index i = 0; i < s.n_in * s.n_out; ++i)
      params[s.weight_offset + i] = static_cast<Scalar>(rng.uniform(-limit, limit));
  }
  return params;
}

/// Pre- and post-activations of one forward pass. post[0] is the input.
template <typename Scalar>
struct ForwardCache {
  std::vector<MatrixX<Scalar>> pre;
  std::vector<MatrixX<Scalar>> post;
  std::uint64_t params_digest = 0;
};

template <typename Scalar>
struct ForwardResult {
  MatrixX<Scalar> output;
  ForwardCache<Scalar> cache;
};

template <typename Scalar>
struct Gradients {
  VectorX<Scalar> params;  ///< canonical layout
  MatrixX<Scalar> input;   ///< same shape as the forward input
};

template <typename Scalar>
void apply_activation(Activation a, MatrixX<Scalar>& z) {
  if (a == Activation::ELU) z = z.unaryExpr([](Scalar v) { return elu(v); });
}

/// Forward pass without recording intermediates.
template <typename P, typename X>
MatrixX<typename P::Scalar> evaluate(const NetShape& shape, const Eigen::MatrixBase<P>& params,
                                     const Eigen::MatrixBase<X>& input) {
  using Scalar = typename P::Scalar;
  detail::check_params(shape, params);
  detail::check_input(shape, input);
  const auto& p = params.derived().eval();
  MatrixX<Scalar> a = input;
  for (Index l = 0; l < shape.depth(); ++l) {
    MatrixX<Scalar> z = detail::weights(shape, p.data(), l) * a;
    z.colwise() += detail::bias(shape, p.data(), l);
    if (l + 1 < shape.depth()) apply_activation(shape.activation(), z);
    a = std::move(z);
  }
  return a;
}

template <typename P, typename X>
ForwardResult<typename P::Scalar> forward(const NetShape& shape, const Eigen::MatrixBase<P>& params,
                                          const Eigen::MatrixBase<X>& input) {
  using Scalar = typename P::Scalar;
  detail::check_params(shape, params);
  detail::check_input(shape, input);
  const auto& p = params.derived().eval();

  ForwardResult<Scalar> result;
  auto& cache = result.cache;
  cache.params_digest = detail::digest<Scalar>({p.data(), static_cast<std::size_t>(p.size())});
  cache.pre.reserve(shape.depth());
  cache.post.reserve(shape.depth() + 1);
  cache.post.emplace_back(input);
  for (Index l = 0; l < shape.depth(); ++l) {
    MatrixX<Scalar> z = detail::weights(shape, p.data(), l) * cache.post.back();
    z.colwise() += detail::bias(shape, p.data(), l);
    cache.pre.push_back(z);
    if (l + 1 < shape.depth()) apply_activation(shape.activation(), z);
    cache.post.push_back(std::move(z));
  }
  result.output = cache.post.back();
  return result;
}

/// Gradients of sum(upstream .* output) with respect to the parameters and the
/// input of the forward pass recorded in `cache`. Parameter gradients are
/// summed over the batch columns.
template <typename P, typename U>
Gradients<typename P::Scalar> backward(const NetShape& shape, const Eigen::MatrixBase<P>& params,
                                       const ForwardCache<typename P::Scalar>& cache,
                                       const Eigen::MatrixBase<U>& upstream) {
  using Scalar = typename P::Scalar;
  detail::check_params(shape, params);
  const auto& p = params.derived().eval();
  detail::require(static_cast<Index>(cache.pre.size()) == shape.depth() &&
                      static_cast<Index>(cache.post.size()) == shape.depth() + 1,
                  "forward cache does not match network depth");
  detail::require(cache.params_digest ==
                      detail::digest<Scalar>({p.data(), static_cast<std::size_t>(p.size())}),
                  "forward cache was produced with different parameters");
  detail::require(upstream.rows() == shape.output_width() && upstream.cols() == cache.post.back().cols(),
                  "upstream gradient shape does not match network output");

  Gradients<Scalar> grads;
  grads.params = VectorX<Scalar>::Zero(p.size());
  MatrixX<Scalar> delta = upstream;
  for (Index l = shape.depth() - 1; l >= 0; --l) {
    if (l + 1 < shape.depth() && shape.activation() == Activation::ELU)
      delta.array() *= cache.pre[l].unaryExpr([](Scalar v) { return elu_derivative(v); }).array();
    const LayerSlice s = layer_slice(shape, l);
    Eigen::Map<RowMajorMatrixX<Scalar>>(grads.params.data() + s.weight_offset, s.n_out, s.n_in)
        .noalias() = delta * cache.post[l].transpose();
    grads.params.segment(s.bias_offset, s.n_out) = delta.rowwise().sum();
    MatrixX<Scalar> next = detail::weights(shape, p.data(), l).transpose() * delta;
    delta = std::move(next);
  }
  grads.input = std::move(delta);
  return grads;
}

/// Max relative error between `analytic` and central differences of
/// sum(upstream .* output), over every parameter and input coordinate.
template <typename Scalar>
Scalar grad_check_against(const NetShape& shape, const VectorX<Scalar>& params,
                          const MatrixX<Scalar>& input, const MatrixX<Scalar>& upstream,
                          const Gradients<Scalar>& analytic, Scalar step = Scalar(1e-5)) {
  auto objective = [&](const VectorX<Scalar>& p, const MatrixX<Scalar>& x) {
    return (upstream.array() * evaluate(shape, p, x).array()).sum();
  };
  auto rel = [](Scalar a, Scalar n) {
    return std::abs(a - n) / std::max(Scalar(1e-12), std::abs(a) + std::abs(n));
  };

  Scalar worst = 0;
  VectorX<Scalar> p = params;
  for (Index i = 0; i < p.size(); ++i) {
    const Scalar saved = p[i];
    p[i] = saved + step;
    const Scalar up = objective(p, input);
    p[i] = saved - step;
    const Scalar down = objective(p, input);
    p[i] = saved;
    worst = std::max(worst, rel(analytic.params[i], (up - down) / (2 * step)));
  }
  MatrixX<Scalar> x = input;
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar saved = x.data()[i];
    x.data()[i] = saved + step;
    const Scalar up = objective(params, x);
    x.data()[i] = saved - step;
    const Scalar down = objective(params, x);
    x.data()[i] = saved;
    worst = std::max(worst, rel(analytic.input.data()[i], (up - down) / (2 * step)));
  }
  return worst;
}

template <typename Scalar>
Scalar grad_check(const NetShape& shape, const VectorX<Scalar>& params, const MatrixX<Scalar>& input,
                  const MatrixX<Scalar>& upstream, Scalar step = Scalar(1e-5)) {
  const auto fwd = forward(shape, params, input);
  return grad_check_against(shape, params, input, upstream,
                            backward(shape, params, fwd.cache, upstream), step);
}

template <typename Scalar = double>
struct AdamState {
  VectorX<Scalar> first_moment;
  VectorX<Scalar> second_moment;
  std::int64_t step = 0;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);

  explicit AdamState(Index n)
      : first_moment(VectorX<Scalar>::Zero(n)), second_moment(VectorX<Scalar>::Zero(n)) {}
};

/// One bias-corrected Adam update in place. Throws std::runtime_error naming
/// `batch_label` if any gradient entry is non-finite; nothing is modified then.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, VectorX<Scalar>& params, const VectorX<Scalar>& grads,
               Scalar learning_rate, std::string_view batch_label = "unnamed batch") {
  detail::require(params.size() == grads.size() && params.size() == state.first_moment.size() &&
                      params.size() == state.second_moment.size(),
                  "adam_step: parameter, gradient and moment lengths differ");
  if (!grads.allFinite()) {
    Index bad = 0;
    while (bad < grads.size() && std::isfinite(grads[bad])) ++bad;
    throw std::runtime_error("non-finite gradient in " + std::string(batch_label) +
                             " (first bad coordinate " + std::to_string(bad) + ")");
  }
  ++state.step;
  state.first_moment = state.beta1 * state.first_moment + (1 - state.beta1) * grads;
  state.second_moment =
      state.beta2 * state.second_moment + (1 - state.beta2) * grads.cwiseAbs2();
  const Scalar correction1 = 1 - std::pow(state.beta1, static_cast<Scalar>(state.step));
  const Scalar correction2 = 1 - std::pow(state.beta2, static_cast<Scalar>(state.step));
  params.array() -= learning_rate * (state.first_moment.array() / correction1) /
                    ((state.second_moment.array() / correction2).sqrt() + state.epsilon);
}

}  // namespace hl
