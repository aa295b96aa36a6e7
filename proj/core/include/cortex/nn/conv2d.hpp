#pragma once

#include <vector>

#include "cortex/rng.hpp"
#include "cortex/tensor.hpp"

namespace cortex::nn {

// 3x3 convolution, stride 1, valid padding. Weights are [out_ch, in_ch, 3, 3],
// bias is [out_ch]. The optional fused relu belongs to the model layer, not to
// the conv2d_forward/backward kernels below.
template <std::floating_point T>
struct Conv2d {
  Tensor<T> weights;
  Tensor<T> bias;
  bool relu = true;

  static constexpr std::int64_t kKernel = 3;

  Conv2d() = default;
  Conv2d(Tensor<T> w, Tensor<T> b, bool relu_act) : weights(std::move(w)), bias(std::move(b)), relu(relu_act) {
    if (weights.shape().rank() != 4 || weights.shape().extent(2) != kKernel ||
        weights.shape().extent(3) != kKernel)
      throw ShapeError("conv weights must be [out,in,3,3], got " + weights.shape().str());
    if (bias.shape().rank() != 1 || bias.shape().extent(0) != weights.shape().extent(0))
      throw ShapeError("conv bias must be [out_channels]");
  }

  std::int64_t out_channels() const { return weights.shape().extent(0); }
  std::int64_t in_channels() const { return weights.shape().extent(1); }

  // Fan-scaled uniform init: bounds +-sqrt(6 / (in*k*k + out*k*k)), bias 0.
  static Conv2d glorot(std::int64_t in_ch, std::int64_t out_ch, bool relu_act, Rng& rng) {
    const double fan_in = static_cast<double>(in_ch) * kKernel * kKernel;
    const double fan_out = static_cast<double>(out_ch) * kKernel * kKernel;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor<T> w(Shape{out_ch, in_ch, kKernel, kKernel});
    for (auto& v : w.data()) v = static_cast<T>(rng.uniform(-limit, limit));
    return Conv2d(std::move(w), Tensor<T>(Shape{out_ch}), relu_act);
  }
};

template <std::floating_point T>
struct Conv2dGrads {
  Tensor<T> d_input;
  Tensor<T> d_weights;
  Tensor<T> d_bias;
};

enum class ConvAlgo { direct, im2col };

namespace detail {

inline void conv_check(const Shape& in, std::int64_t want_cin) {
  if (in.rank() != 4) throw ShapeError("conv input must be [N,C,H,W], got " + in.str());
  if (in.extent(1) != want_cin)
    throw ShapeError("conv input has " + std::to_string(in.extent(1)) +
                     " channels, layer expects " + std::to_string(want_cin));
  if (in.extent(2) < 3 || in.extent(3) < 3)
    throw ShapeError("conv input spatial extents must be >= 3, got " + in.str());
}

// cols[(c*3+dy)*3+dx][y*ow+x] = input_item[c][y+dy][x+dx]
template <std::floating_point T>
void im2col_3x3(const T* in, std::int64_t cin, std::int64_t h, std::int64_t w,
                std::int64_t oh, std::int64_t ow, T* cols) {
  std::int64_t r = 0;
  for (std::int64_t c = 0; c < cin; ++c) {
    const T* plane = in + c * h * w;
    for (std::int64_t dy = 0; dy < 3; ++dy) {
      for (std::int64_t dx = 0; dx < 3; ++dx, ++r) {
        T* dst = cols + r * oh * ow;
        for (std::int64_t y = 0; y < oh; ++y) {
          const T* src = plane + (y + dy) * w + dx;
          for (std::int64_t x = 0; x < ow; ++x) dst[y * ow + x] = src[x];
        }
      }
    }
  }
}

template <std::floating_point T>
std::vector<T>& conv_scratch() {
  thread_local std::vector<T> buf;
  return buf;
}

}  // namespace detail

// out[n,o,y,x] = bias[o] + sum_{c,dy,dx} input[n,c,y+dy,x+dx] * weights[o,c,dy,dx]
//
// The direct path is the loop-level reference; im2col restates the same sums
// as a GEMM with identical (c,dy,dx) accumulation order and is the default.
template <std::floating_point T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Conv2d<T>& layer,
                         ConvAlgo algo = ConvAlgo::im2col) {
  detail::conv_check(input.shape(), layer.in_channels());
  const std::int64_t n = input.shape().extent(0);
  const std::int64_t cin = input.shape().extent(1);
  const std::int64_t h = input.shape().extent(2);
  const std::int64_t w = input.shape().extent(3);
  const std::int64_t cout = layer.out_channels();
  const std::int64_t oh = h - 2;
  const std::int64_t ow = w - 2;

  Tensor<T> out(Shape{n, cout, oh, ow});
  const T* in = input.data().data();
  const T* wt = layer.weights.data().data();
  const T* bias = layer.bias.data().data();
  T* o = out.data().data();

  if (algo == ConvAlgo::direct) {
    parallel_for(n, [&](std::int64_t nb, std::int64_t ne) {
      for (std::int64_t item = nb; item < ne; ++item) {
        const T* x = in + item * cin * h * w;
        T* y = o + item * cout * oh * ow;
        for (std::int64_t oc = 0; oc < cout; ++oc) {
          for (std::int64_t yy = 0; yy < oh; ++yy) {
            for (std::int64_t xx = 0; xx < ow; ++xx) {
              T acc = bias[oc];
              for (std::int64_t c = 0; c < cin; ++c) {
                for (std::int64_t dy = 0; dy < 3; ++dy) {
                  for (std::int64_t dx = 0; dx < 3; ++dx) {
                    acc += x[(c * h + yy + dy) * w + xx + dx] *
                           wt[((oc * cin + c) * 3 + dy) * 3 + dx];
                  }
                }
              }
              y[(oc * oh + yy) * ow + xx] = acc;
            }
          }
        }
      }
    });
    return out;
  }

  const std::int64_t k9 = cin * 9;
  const std::int64_t patches = oh * ow;
  parallel_for(n, [&](std::int64_t nb, std::int64_t ne) {
    auto& cols = detail::conv_scratch<T>();
    cols.resize(static_cast<std::size_t>(k9 * patches));
    for (std::int64_t item = nb; item < ne; ++item) {
      detail::im2col_3x3(in + item * cin * h * w, cin, h, w, oh, ow, cols.data());
      T* y = o + item * cout * patches;
      for (std::int64_t oc = 0; oc < cout; ++oc)
        for (std::int64_t p = 0; p < patches; ++p) y[oc * patches + p] = bias[oc];
      cortex::detail::gemm_acc_rows(wt, cols.data(), y, k9, patches, 0, cout);
    }
  });
  return out;
}

// d_weights[o,c,dy,dx] = sum_{n,y,x} upstream[n,o,y,x] * input[n,c,y+dy,x+dx]
// d_bias[o]            = sum_{n,y,x} upstream[n,o,y,x]
// d_input              = full correlation of upstream with the kernels
//
// Per-item partials are reduced in item order, so the result is independent
// of how items are scheduled across threads.
template <std::floating_point T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& input, const Conv2d<T>& layer,
                               const Tensor<T>& upstream,
                               ConvAlgo algo = ConvAlgo::im2col,
                               bool compute_d_input = true) {
  detail::conv_check(input.shape(), layer.in_channels());
  const std::int64_t n = input.shape().extent(0);
  const std::int64_t cin = input.shape().extent(1);
  const std::int64_t h = input.shape().extent(2);
  const std::int64_t w = input.shape().extent(3);
  const std::int64_t cout = layer.out_channels();
  const std::int64_t oh = h - 2;
  const std::int64_t ow = w - 2;
  const Shape want{n, cout, oh, ow};
  if (upstream.shape() != want)
    throw ShapeError("conv upstream shape " + upstream.shape().str() + ", expected " +
                     want.str());

  Conv2dGrads<T> g;
  g.d_input = Tensor<T>(input.shape());
  g.d_weights = Tensor<T>(layer.weights.shape());
  g.d_bias = Tensor<T>(layer.bias.shape());

  const T* in = input.data().data();
  const T* up = upstream.data().data();
  const T* wt = layer.weights.data().data();
  const std::int64_t k9 = cin * 9;
  const std::int64_t patches = oh * ow;

  if (algo == ConvAlgo::direct) {
    // Reference path: plain loops, single pass per item.
    std::vector<Tensor<T>> dw_items(static_cast<std::size_t>(n));
    parallel_for(n, [&](std::int64_t nb, std::int64_t ne) {
      for (std::int64_t item = nb; item < ne; ++item) {
        Tensor<T> dw(layer.weights.shape());
        T* dwp = dw.data().data();
        const T* x = in + item * cin * h * w;
        const T* u = up + item * cout * patches;
        T* dx = g.d_input.data().data() + item * cin * h * w;
        for (std::int64_t oc = 0; oc < cout; ++oc) {
          for (std::int64_t yy = 0; yy < oh; ++yy) {
            for (std::int64_t xx = 0; xx < ow; ++xx) {
              const T uv = u[(oc * oh + yy) * ow + xx];
              for (std::int64_t c = 0; c < cin; ++c) {
                for (std::int64_t dy = 0; dy < 3; ++dy) {
                  for (std::int64_t dx2 = 0; dx2 < 3; ++dx2) {
                    dwp[((oc * cin + c) * 3 + dy) * 3 + dx2] +=
                        uv * x[(c * h + yy + dy) * w + xx + dx2];
                    if (compute_d_input)
                      dx[(c * h + yy + dy) * w + xx + dx2] +=
                          uv * wt[((oc * cin + c) * 3 + dy) * 3 + dx2];
                  }
                }
              }
            }
          }
        }
        dw_items[static_cast<std::size_t>(item)] = std::move(dw);
      }
    });
    T* dwp = g.d_weights.data().data();
    for (std::int64_t item = 0; item < n; ++item) {
      const T* src = dw_items[static_cast<std::size_t>(item)].data().data();
      for (std::int64_t i = 0; i < g.d_weights.size(); ++i) dwp[i] += src[i];
    }
  } else {
    std::vector<Tensor<T>> dw_items(static_cast<std::size_t>(n));
    parallel_for(n, [&](std::int64_t nb, std::int64_t ne) {
      auto& scratch = detail::conv_scratch<T>();
      scratch.resize(static_cast<std::size_t>(2 * k9 * patches));
      T* cols = scratch.data();
      T* dcols = cols + k9 * patches;
      for (std::int64_t item = nb; item < ne; ++item) {
        detail::im2col_3x3(in + item * cin * h * w, cin, h, w, oh, ow, cols);
        const T* u = up + item * cout * patches;

        // d_weights partial: dw[o][r] = dot(u_row_o, cols_row_r)
        Tensor<T> dw(layer.weights.shape());
        T* dwp = dw.data().data();
        for (std::int64_t oc = 0; oc < cout; ++oc) {
          const T* urow = u + oc * patches;
          for (std::int64_t r = 0; r < k9; ++r)
            dwp[oc * k9 + r] = cortex::detail::vdot(urow, cols + r * patches, patches);
        }
        dw_items[static_cast<std::size_t>(item)] = std::move(dw);

        if (!compute_d_input) continue;

        // d_cols = W^T * upstream, accumulated over output channels in order.
        for (std::int64_t i = 0; i < k9 * patches; ++i) dcols[i] = T(0);
        for (std::int64_t oc = 0; oc < cout; ++oc) {
          const T* urow = u + oc * patches;
          for (std::int64_t r = 0; r < k9; ++r) {
            const T wv = wt[oc * k9 + r];
            T* drow = dcols + r * patches;
            for (std::int64_t p = 0; p < patches; ++p) drow[p] += wv * urow[p];
          }
        }
        // col2im scatter-add back into this item's d_input slice.
        T* dx = g.d_input.data().data() + item * cin * h * w;
        std::int64_t r = 0;
        for (std::int64_t c = 0; c < cin; ++c) {
          T* plane = dx + c * h * w;
          for (std::int64_t dy = 0; dy < 3; ++dy) {
            for (std::int64_t dx2 = 0; dx2 < 3; ++dx2, ++r) {
              const T* drow = dcols + r * patches;
              for (std::int64_t y = 0; y < oh; ++y) {
                T* dst = plane + (y + dy) * w + dx2;
                for (std::int64_t x = 0; x < ow; ++x) dst[x] += drow[y * ow + x];
              }
            }
          }
        }
      }
    });
    T* dwp = g.d_weights.data().data();
    for (std::int64_t item = 0; item < n; ++item) {
      const T* src = dw_items[static_cast<std::size_t>(item)].data().data();
      for (std::int64_t i = 0; i < g.d_weights.size(); ++i) dwp[i] += src[i];
    }
  }

  T* db = g.d_bias.data().data();
  for (std::int64_t item = 0; item < n; ++item) {
    for (std::int64_t oc = 0; oc < cout; ++oc) {
      const T* u = up + (item * cout + oc) * patches;
      T acc = 0;
      for (std::int64_t p = 0; p < patches; ++p) acc += u[p];
      db[oc] += acc;
    }
  }
  return g;
}

}  // namespace cortex::nn
