#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cortex/nn/activations.hpp"
#include "cortex/nn/conv2d.hpp"
#include "cortex/nn/dense.hpp"
#include "cortex/nn/maxpool2d.hpp"
#include "cortex/rng.hpp"
#include "cortex/tensor.hpp"

namespace cortex::nn {

enum class HeadMode { sigmoid, softmax };

template <std::floating_point T>
struct Flatten {};

template <std::floating_point T>
using Layer = std::variant<Conv2d<T>, MaxPool2d<T>, Flatten<T>, Dense<T>>;

template <std::floating_point T>
const char* layer_kind_name(const Layer<T>& l) {
  switch (l.index()) {
    case 0: return "conv2d";
    case 1: return "maxpool2d";
    case 2: return "flatten";
    default: return "dense";
  }
}

// Per-layer parameter gradients; empty tensors for parameterless layers.
template <std::floating_point T>
struct ParamGrads {
  Tensor<T> d_weights;
  Tensor<T> d_bias;
  bool has_params() const { return !d_weights.empty(); }
};

// Everything backward needs from a forward pass: each layer's output (the
// relu gate reads it, since relu(x) > 0 iff x > 0) plus pooling argmaxes.
template <std::floating_point T>
struct ForwardTrace {
  Tensor<T> input;
  std::vector<Tensor<T>> outputs;
  std::vector<std::optional<PoolResult<T>>> pool_aux;  // output tensor unused
  const Tensor<T>& logits() const { return outputs.back(); }
};

// Ordered layer stack. forward() yields pre-activation logits [N, classes];
// the sigmoid/softmax head is applied by scores() and by the loss.
template <std::floating_point T>
struct Model {
  std::vector<Layer<T>> layers;
  HeadMode head = HeadMode::softmax;
  Shape input_spec{1, 1, 1};  // [C,H,W]

  std::int64_t layer_count() const { return static_cast<std::int64_t>(layers.size()); }

  void check_input(const Shape& s) const {
    if (s.rank() != 4 || s.extent(1) != input_spec.extent(0) ||
        s.extent(2) != input_spec.extent(1) || s.extent(3) != input_spec.extent(2))
      throw ShapeError("model expects input [N," + input_spec.str() + "], got " + s.str());
  }

  ForwardTrace<T> forward_trace(const Tensor<T>& input) const {
    check_input(input.shape());
    ForwardTrace<T> tr;
    tr.input = input;
    tr.outputs.reserve(layers.size());
    tr.pool_aux.resize(layers.size());
    const Tensor<T>* x = &tr.input;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      Tensor<T> y = std::visit(
          [&](const auto& l) -> Tensor<T> {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, Conv2d<T>>) {
              Tensor<T> out = conv2d_forward(*x, l);
              return l.relu ? relu(out) : std::move(out);
            } else if constexpr (std::is_same_v<L, MaxPool2d<T>>) {
              PoolResult<T> pr = maxpool2d_forward(*x);
              Tensor<T> out = std::move(pr.output);
              tr.pool_aux[i] = PoolResult<T>{Tensor<T>(), std::move(pr.argmax),
                                             pr.input_shape};
              return out;
            } else if constexpr (std::is_same_v<L, Flatten<T>>) {
              const Shape& s = x->shape();
              return reshape(*x, Shape{s.extent(0), s.count() / s.extent(0)});
            } else {
              Tensor<T> out = dense_forward(*x, l);
              return l.act == Activation::relu ? relu(out) : std::move(out);
            }
          },
          layers[i]);
      tr.outputs.push_back(std::move(y));
      x = &tr.outputs.back();
    }
    return tr;
  }

  // Inference without caches.
  Tensor<T> forward(const Tensor<T>& input) const { return forward_trace(input).outputs.back(); }

  // Head activation applied: per-class sigmoids or a softmax distribution.
  Tensor<T> scores(const Tensor<T>& input) const {
    Tensor<T> logits = forward(input);
    if (head == HeadMode::sigmoid) return sigmoid(logits);
    Tensor<T> out(logits.shape());
    const std::int64_t n = logits.shape().extent(0);
    const std::int64_t k = logits.shape().extent(1);
    for (std::int64_t i = 0; i < n; ++i) {
      const T* row = logits.data().data() + i * k;
      T* orow = out.data().data() + i * k;
      T mx = row[0];
      for (std::int64_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
      T sum = 0;
      for (std::int64_t j = 0; j < k; ++j) {
        orow[j] = std::exp(row[j] - mx);
        sum += orow[j];
      }
      for (std::int64_t j = 0; j < k; ++j) orow[j] /= sum;
    }
    return out;
  }

  // Reverse pass from d(loss)/d(logits). Returns per-layer parameter
  // gradients aligned with `layers`; optionally also d(loss)/d(input).
  std::vector<ParamGrads<T>> backward(const ForwardTrace<T>& tr, const Tensor<T>& d_logits,
                                      Tensor<T>* d_input_out = nullptr) const {
    if (tr.outputs.size() != layers.size())
      throw InternalError("forward trace does not match model");
    std::vector<ParamGrads<T>> grads(layers.size());
    Tensor<T> d = d_logits;
    for (std::size_t ri = layers.size(); ri-- > 0;) {
      const Tensor<T>& layer_in = ri == 0 ? tr.input : tr.outputs[ri - 1];
      const Tensor<T>& layer_out = tr.outputs[ri];
      d = std::visit(
          [&](const auto& l) -> Tensor<T> {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, Conv2d<T>>) {
              Tensor<T> du = l.relu ? relu_backward(layer_out, d) : std::move(d);
              // The input gradient of the first layer is only needed when the
              // caller asked for it.
              const bool need_dx = ri > 0 || d_input_out != nullptr;
              Conv2dGrads<T> cg =
                  conv2d_backward(layer_in, l, du, ConvAlgo::im2col, need_dx);
              grads[ri].d_weights = std::move(cg.d_weights);
              grads[ri].d_bias = std::move(cg.d_bias);
              return std::move(cg.d_input);
            } else if constexpr (std::is_same_v<L, MaxPool2d<T>>) {
              const auto& aux = tr.pool_aux[ri];
              if (!aux) throw InternalError("missing pool aux in trace");
              return maxpool2d_backward(aux->argmax, aux->input_shape, d);
            } else if constexpr (std::is_same_v<L, Flatten<T>>) {
              return reshape(d, layer_in.shape());
            } else {
              Tensor<T> du =
                  l.act == Activation::relu ? relu_backward(layer_out, d) : std::move(d);
              DenseGrads<T> dg = dense_backward(layer_in, l, du);
              grads[ri].d_weights = std::move(dg.d_weights);
              grads[ri].d_bias = std::move(dg.d_bias);
              return std::move(dg.d_input);
            }
          },
          layers[ri]);
    }
    if (d_input_out) *d_input_out = std::move(d);
    return grads;
  }

  // Mutable views of every parameter tensor, layer order, weights then bias.
  std::vector<Tensor<T>*> parameters() {
    std::vector<Tensor<T>*> ps;
    for (auto& l : layers) {
      if (auto* c = std::get_if<Conv2d<T>>(&l)) {
        ps.push_back(&c->weights);
        ps.push_back(&c->bias);
      } else if (auto* dnse = std::get_if<Dense<T>>(&l)) {
        ps.push_back(&dnse->weights);
        ps.push_back(&dnse->bias);
      }
    }
    return ps;
  }

  // Gradients flattened in the same order as parameters().
  static std::vector<const Tensor<T>*> flatten_grads(const std::vector<ParamGrads<T>>& gs) {
    std::vector<const Tensor<T>*> out;
    for (const auto& g : gs) {
      if (g.has_params()) {
        out.push_back(&g.d_weights);
        out.push_back(&g.d_bias);
      }
    }
    return out;
  }

  std::int64_t parameter_count() const {
    std::int64_t n = 0;
    for (const auto& l : layers) {
      if (const auto* c = std::get_if<Conv2d<T>>(&l))
        n += c->weights.size() + c->bias.size();
      else if (const auto* dn = std::get_if<Dense<T>>(&l))
        n += dn->weights.size() + dn->bias.size();
    }
    return n;
  }

  // Output shape of every layer for a [N,C,H,W] input, by pure arithmetic:
  // valid 3x3 conv shrinks H,W by 2; 2x2 pool halves with floor.
  std::vector<Shape> shape_chain(const Shape& in) const {
    check_input(in);
    std::vector<Shape> chain;
    Shape cur = in;
    for (const auto& l : layers) {
      cur = std::visit(
          [&](const auto& lay) -> Shape {
            using L = std::decay_t<decltype(lay)>;
            if constexpr (std::is_same_v<L, Conv2d<T>>) {
              return Shape{cur.extent(0), lay.out_channels(), cur.extent(2) - 2,
                           cur.extent(3) - 2};
            } else if constexpr (std::is_same_v<L, MaxPool2d<T>>) {
              return Shape{cur.extent(0), cur.extent(1), cur.extent(2) / 2,
                           cur.extent(3) / 2};
            } else if constexpr (std::is_same_v<L, Flatten<T>>) {
              return Shape{cur.extent(0), cur.count() / cur.extent(0)};
            } else {
              return Shape{cur.extent(0), lay.out_features()};
            }
          },
          l);
      chain.push_back(cur);
    }
    return chain;
  }
};

// The eleven-layer stack: four conv(3x3)+relu / pool(2x2) pairs with 32, 64,
// 128, 128 filters, flatten, dense 512 + relu, dense 4 feeding the head.
// Input spatial size is a parameter so the same stack runs at reduced scale;
// the published network uses 200x200.
template <std::floating_point T>
Model<T> build_paper_model(HeadMode head, std::int64_t height = 200,
                           std::int64_t width = 200, std::uint64_t seed = 1,
                           std::int64_t in_channels = 3) {
  Model<T> m;
  m.head = head;
  m.input_spec = Shape{in_channels, height, width};
  Rng rng = Rng::derive(seed, 0x6d6f64656cULL);

  const std::int64_t filters[4] = {32, 64, 128, 128};
  std::int64_t c = in_channels, h = height, w = width;
  for (int s = 0; s < 4; ++s) {
    if (h < 3 || w < 3)
      throw ShapeError("input too small for the four conv/pool stages");
    m.layers.emplace_back(Conv2d<T>::glorot(c, filters[s], /*relu=*/true, rng));
    c = filters[s];
    h -= 2;
    w -= 2;
    if (h < 2 || w < 2)
      throw ShapeError("input too small for the four conv/pool stages");
    m.layers.emplace_back(MaxPool2d<T>{});
    h /= 2;
    w /= 2;
  }
  m.layers.emplace_back(Flatten<T>{});
  const std::int64_t flat = c * h * w;
  m.layers.emplace_back(Dense<T>::glorot(flat, 512, Activation::relu, rng));
  m.layers.emplace_back(Dense<T>::glorot(512, 4, Activation::none, rng));
  return m;
}

}  // namespace cortex::nn
