#include "cortex/nn/gradcheck.hpp"

#include <cmath>
#include <functional>

#include "cortex/error.hpp"
#include "cortex/nn/model.hpp"
#include "cortex/rng.hpp"
#include "cortex/train/loss.hpp"

namespace cortex::nn::gradcheck {
namespace {

TensorD random_tensor(const Shape& s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  TensorD t(s);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Keeps relu evaluation points away from the kink so the central difference
// stays on one side.
void push_from_zero(TensorD& t, double margin = 2e-3) {
  for (auto& v : t.data()) {
    if (std::abs(v) < margin) v = v >= 0 ? v + margin : v - margin;
  }
}

// Separates the top two values of every 2x2 pooling window so an eps-sized
// perturbation cannot flip the argmax.
void separate_pool_windows(TensorD& t, double margin = 2e-3) {
  const Shape& s = t.shape();
  const std::int64_t n = s.extent(0), c = s.extent(1), h = s.extent(2), w = s.extent(3);
  for (std::int64_t plane = 0; plane < n * c; ++plane) {
    double* p = t.data().data() + plane * h * w;
    for (std::int64_t y = 0; y + 1 < h; y += 2) {
      for (std::int64_t x = 0; x + 1 < w; x += 2) {
        std::int64_t idx[4] = {y * w + x, y * w + x + 1, (y + 1) * w + x, (y + 1) * w + x + 1};
        std::int64_t best = idx[0];
        for (int k = 1; k < 4; ++k)
          if (p[idx[k]] > p[best]) best = idx[k];
        double second = -1e300;
        for (int k = 0; k < 4; ++k)
          if (idx[k] != best) second = std::max(second, p[idx[k]]);
        if (p[best] - second < margin) p[best] = second + margin;
      }
    }
  }
}

struct FdProblem {
  std::string name;
  std::vector<TensorD*> tensors;          // perturbed in place
  std::vector<const TensorD*> analytic;   // aligned with tensors
  std::function<double()> eval;           // loss at current tensor values
};

CheckResult run_fd(FdProblem& prob, bool inject_fault) {
  CheckResult res;
  res.name = prob.name;
  std::int64_t coord = 0;
  double injected_delta = 0.0;
  for (std::size_t ti = 0; ti < prob.tensors.size(); ++ti) {
    TensorD& t = *prob.tensors[ti];
    const TensorD& a = *prob.analytic[ti];
    if (a.shape() != t.shape()) throw InternalError("gradcheck: analytic shape mismatch");
    for (std::int64_t i = 0; i < t.size(); ++i, ++coord) {
      double& v = t[i];
      const double orig = v;
      v = orig + kEpsilon;
      const double plus = prob.eval();
      v = orig - kEpsilon;
      const double minus = prob.eval();
      v = orig;
      const double fd = (plus - minus) / (2.0 * kEpsilon);
      double an = a[i];
      if (inject_fault && ti == 0 && i == 0) {
        injected_delta = std::abs(an) > 1e-3 ? an * 0.5 : 1.0;
        an += injected_delta;
      }
      const double denom = std::max(std::max(std::abs(an), std::abs(fd)), 1e-6);
      const double rel = std::abs(an - fd) / denom;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_coordinate = coord;
      }
    }
  }
  res.pass = res.max_rel_err <= kTolerance;
  return res;
}

double weighted_sum(const TensorD& t, const TensorD& w) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < t.size(); ++i) acc += t[i] * w[i];
  return acc;
}

CheckResult check_conv(Rng& rng, bool fault) {
  TensorD input = random_tensor(Shape{2, 2, 5, 6}, rng);
  Conv2d<double> layer(random_tensor(Shape{3, 2, 3, 3}, rng),
                       random_tensor(Shape{3}, rng), false);
  const TensorD w = random_tensor(Shape{2, 3, 3, 4}, rng);
  Conv2dGrads<double> g = conv2d_backward(input, layer, w);
  FdProblem prob;
  prob.name = "conv2d";
  prob.tensors = {&input, &layer.weights, &layer.bias};
  prob.analytic = {&g.d_input, &g.d_weights, &g.d_bias};
  prob.eval = [&] { return weighted_sum(conv2d_forward(input, layer), w); };
  return run_fd(prob, fault);
}

CheckResult check_pool(Rng& rng, bool fault) {
  TensorD input = random_tensor(Shape{2, 3, 6, 7}, rng);
  separate_pool_windows(input);
  const TensorD w = random_tensor(Shape{2, 3, 3, 3}, rng);
  PoolResult<double> fwd = maxpool2d_forward(input);
  TensorD d_input = maxpool2d_backward(fwd.argmax, input.shape(), w);
  FdProblem prob;
  prob.name = "maxpool2d";
  prob.tensors = {&input};
  prob.analytic = {&d_input};
  prob.eval = [&] { return weighted_sum(maxpool2d_forward(input).output, w); };
  return run_fd(prob, fault);
}

CheckResult check_dense(Rng& rng, bool fault) {
  TensorD input = random_tensor(Shape{3, 7}, rng);
  Dense<double> layer(random_tensor(Shape{7, 5}, rng), random_tensor(Shape{5}, rng),
                      Activation::none);
  const TensorD w = random_tensor(Shape{3, 5}, rng);
  DenseGrads<double> g = dense_backward(input, layer, w);
  FdProblem prob;
  prob.name = "dense";
  prob.tensors = {&input, &layer.weights, &layer.bias};
  prob.analytic = {&g.d_input, &g.d_weights, &g.d_bias};
  prob.eval = [&] { return weighted_sum(dense_forward(input, layer), w); };
  return run_fd(prob, fault);
}

CheckResult check_relu(Rng& rng, bool fault) {
  TensorD input = random_tensor(Shape{4, 9}, rng);
  push_from_zero(input);
  const TensorD w = random_tensor(Shape{4, 9}, rng);
  TensorD d_input = relu_backward(input, w);
  FdProblem prob;
  prob.name = "relu";
  prob.tensors = {&input};
  prob.analytic = {&d_input};
  prob.eval = [&] { return weighted_sum(relu(input), w); };
  return run_fd(prob, fault);
}

CheckResult check_sigmoid(Rng& rng, bool fault) {
  TensorD input = random_tensor(Shape{4, 9}, rng, -4.0, 4.0);
  const TensorD w = random_tensor(Shape{4, 9}, rng);
  TensorD out = sigmoid(input);
  TensorD d_input = sigmoid_backward(out, w);
  FdProblem prob;
  prob.name = "sigmoid";
  prob.tensors = {&input};
  prob.analytic = {&d_input};
  prob.eval = [&] { return weighted_sum(sigmoid(input), w); };
  return run_fd(prob, fault);
}

CheckResult check_loss(Rng& rng, train::LossKind kind, bool fault) {
  TensorD logits = random_tensor(Shape{3, 4}, rng, -2.0, 2.0);
  const std::vector<int> labels = {static_cast<int>(rng.below(4)),
                                   static_cast<int>(rng.below(4)),
                                   static_cast<int>(rng.below(4))};
  train::LossResult<double> lr = train::cross_entropy(logits, labels, kind);
  FdProblem prob;
  prob.name = kind == train::LossKind::categorical_ce ? "loss-categorical-ce" : "loss-per-class-bce";
  prob.tensors = {&logits};
  prob.analytic = {&lr.d_logits};
  prob.eval = [&] { return train::cross_entropy(logits, labels, kind).loss; };
  return run_fd(prob, fault);
}

// conv(1->2)+relu, pool, conv(2->3)+relu, flatten, dense(3->8)+relu,
// dense(8->4), cross-entropy: the whole-model composition on an 8x8 input.
CheckResult check_composed(Rng& rng, train::LossKind kind, bool fault) {
  Model<double> m;
  m.head = HeadMode::softmax;
  m.input_spec = Shape{1, 8, 8};
  m.layers.emplace_back(Conv2d<double>(random_tensor(Shape{2, 1, 3, 3}, rng),
                                       random_tensor(Shape{2}, rng, -0.1, 0.1), true));
  m.layers.emplace_back(MaxPool2d<double>{});
  m.layers.emplace_back(Conv2d<double>(random_tensor(Shape{3, 2, 3, 3}, rng),
                                       random_tensor(Shape{3}, rng, -0.1, 0.1), true));
  m.layers.emplace_back(Flatten<double>{});
  m.layers.emplace_back(Dense<double>(random_tensor(Shape{3, 8}, rng),
                                      random_tensor(Shape{8}, rng, -0.1, 0.1),
                                      Activation::relu));
  m.layers.emplace_back(Dense<double>(random_tensor(Shape{8, 4}, rng),
                                      random_tensor(Shape{4}, rng, -0.1, 0.1),
                                      Activation::none));

  TensorD input = random_tensor(Shape{2, 1, 8, 8}, rng, 0.0, 1.0);
  const std::vector<int> labels = {static_cast<int>(rng.below(4)),
                                   static_cast<int>(rng.below(4))};

  ForwardTrace<double> tr = m.forward_trace(input);
  train::LossResult<double> lr = train::cross_entropy(tr.logits(), labels, kind);
  TensorD d_input;
  std::vector<ParamGrads<double>> grads = m.backward(tr, lr.d_logits, &d_input);

  FdProblem prob;
  prob.name = kind == train::LossKind::categorical_ce ? "composed-model-softmax"
                                                      : "composed-model-sigmoid";
  prob.tensors.push_back(&input);
  prob.analytic.push_back(&d_input);
  std::vector<TensorD*> params = m.parameters();
  std::vector<const TensorD*> flat = Model<double>::flatten_grads(grads);
  for (std::size_t i = 0; i < params.size(); ++i) {
    prob.tensors.push_back(params[i]);
    prob.analytic.push_back(flat[i]);
  }
  prob.eval = [&] {
    return train::cross_entropy(m.forward(input), labels, kind).loss;
  };
  return run_fd(prob, fault);
}

}  // namespace

LayerFilter parse_filter(const std::string& name) {
  if (name == "all") return LayerFilter::all;
  if (name == "conv") return LayerFilter::conv;
  if (name == "pool") return LayerFilter::pool;
  if (name == "dense") return LayerFilter::dense;
  if (name == "activations") return LayerFilter::activations;
  throw ValidationError("unknown gradcheck filter '" + name + "'");
}

std::vector<CheckResult> run_suite(std::uint64_t seed, LayerFilter filter, bool inject_fault) {
  std::vector<CheckResult> results;
  Rng rng = Rng::derive(seed, 0x67726164ULL);
  const bool all = filter == LayerFilter::all;

  if (all || filter == LayerFilter::conv)
    results.push_back(check_conv(rng, inject_fault));
  if (all || filter == LayerFilter::pool)
    results.push_back(check_pool(rng, inject_fault));
  if (all || filter == LayerFilter::dense)
    results.push_back(check_dense(rng, inject_fault));
  if (all || filter == LayerFilter::activations) {
    results.push_back(check_relu(rng, inject_fault));
    results.push_back(check_sigmoid(rng, inject_fault));
  }
  if (all) {
    results.push_back(check_loss(rng, train::LossKind::categorical_ce, inject_fault));
    results.push_back(check_loss(rng, train::LossKind::per_class_bce, inject_fault));
    results.push_back(check_composed(rng, train::LossKind::categorical_ce, inject_fault));
    results.push_back(check_composed(rng, train::LossKind::per_class_bce, inject_fault));
  }
  return results;
}

}  // namespace cortex::nn::gradcheck
