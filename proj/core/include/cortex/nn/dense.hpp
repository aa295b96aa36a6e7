#pragma once

#include "cortex/rng.hpp"
#include "cortex/tensor.hpp"

namespace cortex::nn {

enum class Activation { none, relu };

// Fully connected layer: out = input * weights + bias, weights [in, out].
template <std::floating_point T>
struct Dense {
  Tensor<T> weights;
  Tensor<T> bias;
  Activation act = Activation::none;

  Dense() = default;
  Dense(Tensor<T> w, Tensor<T> b, Activation a)
      : weights(std::move(w)), bias(std::move(b)), act(a) {
    if (weights.shape().rank() != 2)
      throw ShapeError("dense weights must be [in,out], got " + weights.shape().str());
    if (bias.shape().rank() != 1 || bias.shape().extent(0) != weights.shape().extent(1))
      throw ShapeError("dense bias must be [out_features]");
  }

  std::int64_t in_features() const { return weights.shape().extent(0); }
  std::int64_t out_features() const { return weights.shape().extent(1); }

  static Dense glorot(std::int64_t in_f, std::int64_t out_f, Activation a, Rng& rng) {
    const double limit = std::sqrt(6.0 / (static_cast<double>(in_f) + static_cast<double>(out_f)));
    Tensor<T> w(Shape{in_f, out_f});
    for (auto& v : w.data()) v = static_cast<T>(rng.uniform(-limit, limit));
    return Dense(std::move(w), Tensor<T>(Shape{out_f}), a);
  }
};

template <std::floating_point T>
struct DenseGrads {
  Tensor<T> d_input;
  Tensor<T> d_weights;
  Tensor<T> d_bias;
};

template <std::floating_point T>
Tensor<T> dense_forward(const Tensor<T>& input, const Dense<T>& layer) {
  if (input.shape().rank() != 2)
    throw ShapeError("dense input must be [N,F], got " + input.shape().str());
  if (input.shape().extent(1) != layer.in_features())
    throw ShapeError("dense input has " + std::to_string(input.shape().extent(1)) +
                     " features, layer expects " + std::to_string(layer.in_features()));
  const std::int64_t n = input.shape().extent(0);
  const std::int64_t f = layer.in_features();
  const std::int64_t u = layer.out_features();

  Tensor<T> out(Shape{n, u});
  T* o = out.data().data();
  const T* bias = layer.bias.data().data();
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < u; ++j) o[i * u + j] = bias[j];
  cortex::detail::gemm_acc(input.data().data(), layer.weights.data().data(), o, n, f, u);
  return out;
}

// d_weights = input^T * upstream; d_bias = column sums of upstream;
// d_input = upstream * weights^T.
template <std::floating_point T>
DenseGrads<T> dense_backward(const Tensor<T>& input, const Dense<T>& layer,
                             const Tensor<T>& upstream) {
  const std::int64_t n = input.shape().extent(0);
  const std::int64_t f = layer.in_features();
  const std::int64_t u = layer.out_features();
  if (input.shape().rank() != 2 || input.shape().extent(1) != f)
    throw ShapeError("dense backward input shape mismatch");
  if (upstream.shape() != Shape{n, u})
    throw ShapeError("dense upstream shape " + upstream.shape().str() + ", expected " +
                     Shape{n, u}.str());

  DenseGrads<T> g;
  g.d_input = Tensor<T>(Shape{n, f});
  g.d_weights = Tensor<T>(Shape{f, u});
  g.d_bias = Tensor<T>(Shape{u});

  const T* x = input.data().data();
  const T* up = upstream.data().data();
  const T* w = layer.weights.data().data();

  // dW row r accumulates over items in order; rows are independent.
  T* dw = g.d_weights.data().data();
  parallel_for(f, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t r = b; r < e; ++r) {
      T* row = dw + r * u;
      for (std::int64_t i = 0; i < n; ++i) {
        const T xv = x[i * f + r];
        const T* urow = up + i * u;
        for (std::int64_t j = 0; j < u; ++j) row[j] += xv * urow[j];
      }
    }
  });

  // d_input[i][r] = dot(upstream row i, weights row r).
  T* dx = g.d_input.data().data();
  parallel_for(n, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      const T* urow = up + i * u;
      T* xrow = dx + i * f;
      for (std::int64_t r = 0; r < f; ++r)
        xrow[r] = cortex::detail::vdot(urow, w + r * u, u);
    }
  });

  T* db = g.d_bias.data().data();
  for (std::int64_t i = 0; i < n; ++i) {
    const T* urow = up + i * u;
    for (std::int64_t j = 0; j < u; ++j) db[j] += urow[j];
  }
  return g;
}

}  // namespace cortex::nn
