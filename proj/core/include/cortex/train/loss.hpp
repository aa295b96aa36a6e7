#pragma once

#include <span>
#include <vector>

#include "cortex/nn/activations.hpp"
#include "cortex/tensor.hpp"
#include "cortex/train/config.hpp"

namespace cortex::train {

template <std::floating_point T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> d_logits;  // gradient w.r.t. the pre-activation outputs
};

// logits: [N, classes]; labels in 0..classes-1. Optional per-class weights
// rescale each example's contribution by weight[label] (weighted mean).
template <std::floating_point T>
LossResult<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels,
                            LossKind kind,
                            std::span<const double> class_weights = {}) {
  if (logits.shape().rank() != 2)
    throw ShapeError("loss expects [N,classes] logits, got " + logits.shape().str());
  const std::int64_t n = logits.shape().extent(0);
  const std::int64_t k = logits.shape().extent(1);
  if (static_cast<std::int64_t>(labels.size()) != n)
    throw ValidationError("label count does not match batch size");
  for (int y : labels)
    if (y < 0 || y >= k)
      throw ValidationError("label " + std::to_string(y) + " outside 0.." +
                            std::to_string(k - 1));
  if (!class_weights.empty() && static_cast<std::int64_t>(class_weights.size()) != k)
    throw ValidationError("class weight count does not match class count");

  LossResult<T> res;
  res.d_logits = Tensor<T>(logits.shape());
  const T* z = logits.data().data();
  T* g = res.d_logits.data().data();

  double total = 0.0;
  double weight_sum = 0.0;
  std::vector<double> ex_weight(static_cast<std::size_t>(n), 1.0);
  for (std::int64_t i = 0; i < n; ++i) {
    if (!class_weights.empty()) ex_weight[i] = class_weights[labels[i]];
    weight_sum += ex_weight[i];
  }
  if (weight_sum <= 0.0) throw ValidationError("class weights sum to zero");

  if (kind == LossKind::categorical_ce) {
    for (std::int64_t i = 0; i < n; ++i) {
      const T* row = z + i * k;
      double mx = row[0];
      for (std::int64_t j = 1; j < k; ++j) mx = std::max<double>(mx, row[j]);
      double sum = 0.0;
      for (std::int64_t j = 0; j < k; ++j) sum += std::exp(static_cast<double>(row[j]) - mx);
      const double lse = mx + std::log(sum);
      total += ex_weight[i] * (lse - row[labels[i]]);
      const double scale = ex_weight[i] / weight_sum;
      for (std::int64_t j = 0; j < k; ++j) {
        const double p = std::exp(static_cast<double>(row[j]) - lse);
        g[i * k + j] = static_cast<T>(scale * (p - (j == labels[i] ? 1.0 : 0.0)));
      }
    }
    res.loss = total / weight_sum;
  } else {
    // Mean over the k per-class binary problems as well as over examples.
    for (std::int64_t i = 0; i < n; ++i) {
      const T* row = z + i * k;
      const double scale = ex_weight[i] / (weight_sum * static_cast<double>(k));
      for (std::int64_t j = 0; j < k; ++j) {
        const double t = j == labels[i] ? 1.0 : 0.0;
        const double x = row[j];
        // log(1+e^x) evaluated without overflow; BCE = softplus(x) - t*x.
        const double softplus = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
        total += ex_weight[i] * (softplus - t * x) / static_cast<double>(k);
        const double s = nn::sigmoid_scalar(x);
        g[i * k + j] = static_cast<T>(scale * (s - t));
      }
    }
    res.loss = total / weight_sum;
  }
  return res;
}

}  // namespace cortex::train
