#pragma once

#include <vector>

#include "cortex/tensor.hpp"

namespace cortex::nn {

// 2x2 max pooling, stride 2, floor semantics: an odd trailing row/column is
// dropped. Ties resolve to the first cell of the window in row-major order.
template <std::floating_point T>
struct MaxPool2d {};

template <std::floating_point T>
struct PoolResult {
  Tensor<T> output;
  // Flat index into the pooled input for each output cell, in the output's
  // row-major order. Kept alongside the input shape for the backward pass.
  std::vector<std::int64_t> argmax;
  Shape input_shape;
};

template <std::floating_point T>
PoolResult<T> maxpool2d_forward(const Tensor<T>& input) {
  if (input.shape().rank() != 4)
    throw ShapeError("maxpool input must be [N,C,H,W], got " + input.shape().str());
  const std::int64_t n = input.shape().extent(0);
  const std::int64_t c = input.shape().extent(1);
  const std::int64_t h = input.shape().extent(2);
  const std::int64_t w = input.shape().extent(3);
  if (h < 2 || w < 2)
    throw ShapeError("maxpool input spatial extents must be >= 2, got " +
                     input.shape().str());
  const std::int64_t oh = h / 2;
  const std::int64_t ow = w / 2;

  PoolResult<T> res;
  res.output = Tensor<T>(Shape{n, c, oh, ow});
  res.argmax.assign(static_cast<std::size_t>(n * c * oh * ow), 0);
  res.input_shape = input.shape();

  const T* in = input.data().data();
  T* out = res.output.data().data();
  std::int64_t* amax = res.argmax.data();

  parallel_for(n * c, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t plane = b; plane < e; ++plane) {
      const T* src = in + plane * h * w;
      T* dst = out + plane * oh * ow;
      std::int64_t* am = amax + plane * oh * ow;
      const std::int64_t base = plane * h * w;
      for (std::int64_t y = 0; y < oh; ++y) {
        for (std::int64_t x = 0; x < ow; ++x) {
          const std::int64_t iy = 2 * y;
          const std::int64_t ix = 2 * x;
          // First occurrence wins ties, hence strict > below.
          std::int64_t best = iy * w + ix;
          T best_v = src[best];
          const std::int64_t cand[3] = {iy * w + ix + 1, (iy + 1) * w + ix,
                                        (iy + 1) * w + ix + 1};
          for (std::int64_t k = 0; k < 3; ++k) {
            if (src[cand[k]] > best_v) {
              best_v = src[cand[k]];
              best = cand[k];
            }
          }
          dst[y * ow + x] = best_v;
          am[y * ow + x] = base + best;
        }
      }
    }
  });
  return res;
}

// Routes each output cell's upstream value to its window winner; everything
// else stays zero. Stride-2 windows are disjoint, so no accumulation races.
template <std::floating_point T>
Tensor<T> maxpool2d_backward(const std::vector<std::int64_t>& argmax,
                             const Shape& input_shape, const Tensor<T>& upstream) {
  Tensor<T> d_input(input_shape);
  if (static_cast<std::int64_t>(argmax.size()) != upstream.size())
    throw ShapeError("maxpool argmax length does not match upstream size");
  const T* up = upstream.data().data();
  T* dx = d_input.data().data();
  const std::int64_t in_count = d_input.size();
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    const std::int64_t idx = argmax[i];
    if (idx < 0 || idx >= in_count)
      throw InternalError("maxpool argmax index out of range");
    dx[idx] += up[static_cast<std::int64_t>(i)];
  }
  return d_input;
}

}  // namespace cortex::nn
