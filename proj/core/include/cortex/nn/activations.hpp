#pragma once

#include "cortex/tensor.hpp"

namespace cortex::nn {

// max(0, x). Backward gates the upstream by input > 0; the subgradient at
// exactly 0 is 0.
template <std::floating_point T>
Tensor<T> relu(const Tensor<T>& x) {
  return map_elementwise(x, [](T v) { return v > T(0) ? v : T(0); });
}

template <std::floating_point T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& upstream) {
  if (input.shape() != upstream.shape())
    throw ShapeError("relu_backward shape mismatch: " + input.shape().str() + " vs " +
                     upstream.shape().str());
  Tensor<T> out(input.shape());
  const T* in = input.data().data();
  const T* up = upstream.data().data();
  T* o = out.data().data();
  parallel_for(input.size(), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) o[i] = in[i] > T(0) ? up[i] : T(0);
  });
  return out;
}

template <std::floating_point T>
T sigmoid_scalar(T x) {
  // Split on sign so exp never overflows for |x| up to a few hundred.
  if (x >= T(0)) {
    return T(1) / (T(1) + std::exp(-x));
  }
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <std::floating_point T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return map_elementwise(x, [](T v) { return sigmoid_scalar(v); });
}

// Takes the forward *output*: d_input = upstream * out * (1 - out).
template <std::floating_point T>
Tensor<T> sigmoid_backward(const Tensor<T>& output, const Tensor<T>& upstream) {
  if (output.shape() != upstream.shape())
    throw ShapeError("sigmoid_backward shape mismatch");
  Tensor<T> out(output.shape());
  const T* y = output.data().data();
  const T* up = upstream.data().data();
  T* o = out.data().data();
  parallel_for(output.size(), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) o[i] = up[i] * y[i] * (T(1) - y[i]);
  });
  return out;
}

}  // namespace cortex::nn
