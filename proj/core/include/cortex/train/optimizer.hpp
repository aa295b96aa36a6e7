#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "cortex/error.hpp"
#include "cortex/tensor.hpp"
#include "cortex/train/config.hpp"

namespace cortex::train {

// Stateful parameter updater. One instance per training run; moment buffers
// are allocated lazily to match the parameter list of the first step.
template <std::floating_point T>
class Optimizer {
 public:
  explicit Optimizer(const TrainConfig& cfg) : cfg_(cfg) {}

  void step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>* const> grads) {
    if (params.size() != grads.size())
      throw ShapeError("optimizer: parameter/gradient count mismatch");
    if (state_.empty()) init(params);
    ++t_;

    const double lr = cfg_.learning_rate;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
      Tensor<T>& p = *params[pi];
      const Tensor<T>& g = *grads[pi];
      if (p.shape() != g.shape())
        throw ShapeError("optimizer: gradient shape " + g.shape().str() +
                         " does not match parameter " + p.shape().str());
      T* pv = p.data().data();
      const T* gv = g.data().data();
      const std::int64_t n = p.size();
      for (std::int64_t i = 0; i < n; ++i) {
        if (!std::isfinite(gv[i]))
          throw TrainingDiverged("non-finite gradient in optimizer step", -1, -1);
      }
      switch (cfg_.optimizer) {
        case OptimizerKind::sgd:
          for (std::int64_t i = 0; i < n; ++i) pv[i] -= static_cast<T>(lr * gv[i]);
          break;
        case OptimizerKind::sgd_momentum: {
          T* v = state_[pi].m1.data().data();
          const T beta = static_cast<T>(cfg_.momentum_beta);
          for (std::int64_t i = 0; i < n; ++i) {
            v[i] = beta * v[i] + gv[i];
            pv[i] -= static_cast<T>(lr) * v[i];
          }
          break;
        }
        case OptimizerKind::adam: {
          T* m = state_[pi].m1.data().data();
          T* v = state_[pi].m2.data().data();
          const double b1 = cfg_.adam_beta1;
          const double b2 = cfg_.adam_beta2;
          const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
          const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
          for (std::int64_t i = 0; i < n; ++i) {
            const double gd = gv[i];
            m[i] = static_cast<T>(b1 * m[i] + (1.0 - b1) * gd);
            v[i] = static_cast<T>(b2 * v[i] + (1.0 - b2) * gd * gd);
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            pv[i] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps));
          }
          break;
        }
      }
    }
  }

  std::int64_t steps_taken() const { return t_; }

 private:
  struct State {
    Tensor<T> m1;
    Tensor<T> m2;
  };

  void init(std::span<Tensor<T>* const> params) {
    state_.reserve(params.size());
    for (const Tensor<T>* p : params) {
      State s;
      if (cfg_.optimizer != OptimizerKind::sgd) s.m1 = Tensor<T>(p->shape());
      if (cfg_.optimizer == OptimizerKind::adam) s.m2 = Tensor<T>(p->shape());
      state_.push_back(std::move(s));
    }
  }

  TrainConfig cfg_;
  std::vector<State> state_;
  std::int64_t t_ = 0;
};

}  // namespace cortex::train
