#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cortex/data/dataset.hpp"
#include "cortex/metrics/metrics.hpp"
#include "cortex/nn/model.hpp"
#include "cortex/rng.hpp"
#include "cortex/train/config.hpp"
#include "cortex/train/loss.hpp"
#include "cortex/train/optimizer.hpp"

namespace cortex::train {

struct EpochRecord {
  int epoch = 0;                 // 1-based
  float train_loss = 0.0f;       // epoch mean of per-example loss
  float train_accuracy = 0.0f;   // running accuracy over the epoch's batches
  std::optional<float> eval_accuracy;
  std::optional<float> eval_macro_precision;
};

// Receives one record per epoch, in order, from the training thread.
class MetricsSink {
 public:
  virtual ~MetricsSink() = default;
  virtual void on_epoch(const EpochRecord& rec) = 0;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  float final_train_loss = 0.0f;
  float final_train_accuracy = 0.0f;
};

namespace detail {

// Gathers examples into one [B,3,H,W] batch tensor plus labels.
inline void gather_batch(const data::Dataset& ds, std::span<const std::int64_t> idx,
                         TensorF& batch, std::vector<int>& labels) {
  const Shape& img = ds.examples.at(0).image.shape();
  const std::int64_t stride = img.count();
  batch = TensorF(Shape{static_cast<std::int64_t>(idx.size()), img.extent(0),
                        img.extent(1), img.extent(2)});
  labels.clear();
  float* out = batch.data().data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const data::Example& ex = ds.examples.at(static_cast<std::size_t>(idx[i]));
    if (ex.image.shape() != img)
      throw ShapeError("dataset contains mixed image shapes");
    std::copy(ex.image.data().begin(), ex.image.data().end(), out + static_cast<std::int64_t>(i) * stride);
    labels.push_back(ex.label);
  }
}

inline std::vector<double> inverse_frequency_weights(const data::Dataset& ds,
                                                     std::span<const std::int64_t> idx) {
  std::array<std::int64_t, data::kNumClasses> counts{};
  for (auto i : idx) counts[static_cast<std::size_t>(ds.examples.at(static_cast<std::size_t>(i)).label)]++;
  std::vector<double> w(data::kNumClasses, 0.0);
  double mean = 0.0;
  int present = 0;
  for (int c = 0; c < data::kNumClasses; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) {
      w[static_cast<std::size_t>(c)] = 1.0 / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      mean += w[static_cast<std::size_t>(c)];
      ++present;
    }
  }
  if (present == 0) throw ValidationError("training subset is empty");
  mean /= present;
  for (auto& v : w) v = v > 0 ? v / mean : 0.0;  // normalize to mean 1
  return w;
}

}  // namespace detail

// Argmax predictions over a subset, in batches, paired with true labels.
inline void predict_subset(const nn::Model<float>& model, const data::Dataset& ds,
                           std::span<const std::int64_t> idx, std::vector<int>& truth,
                           std::vector<int>& predicted, int batch_size = 32) {
  truth.clear();
  predicted.clear();
  TensorF batch;
  std::vector<int> labels;
  for (std::size_t at = 0; at < idx.size(); at += static_cast<std::size_t>(batch_size)) {
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(batch_size), idx.size() - at);
    detail::gather_batch(ds, idx.subspan(at, take), batch, labels);
    std::vector<int> preds = metrics::predict_class(model.forward(batch));
    predicted.insert(predicted.end(), preds.begin(), preds.end());
    truth.insert(truth.end(), labels.begin(), labels.end());
  }
}

inline double subset_accuracy(const nn::Model<float>& model, const data::Dataset& ds,
                              std::span<const std::int64_t> idx, int batch_size = 32) {
  if (idx.empty()) return 0.0;
  std::vector<int> truth, predicted;
  predict_subset(model, ds, idx, truth, predicted, batch_size);
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i] == predicted[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

// Seeded mini-batch gradient descent over the selected examples. Shuffling
// is reseeded per epoch from (seed, epoch); with config.determinism the whole
// run is bit-reproducible (the kernels are deterministic for any thread
// count, so this engine honors the flag unconditionally).
//
// Throws TrainingDiverged with the failing epoch/batch on non-finite loss.
inline TrainResult train(nn::Model<float>& model, const data::Dataset& ds,
                         std::span<const std::int64_t> train_idx, const TrainConfig& cfg,
                         MetricsSink* sink = nullptr,
                         std::span<const std::int64_t> eval_idx = {}) {
  cfg.validate();
  if (train_idx.empty()) throw ValidationError("training subset is empty");
  for (auto i : train_idx) {
    const int label = ds.examples.at(static_cast<std::size_t>(i)).label;
    if (label < 0 || label >= data::kNumClasses)
      throw ValidationError("label out of range in training subset");
  }

  std::vector<double> class_w;
  if (cfg.class_weights) class_w = detail::inverse_frequency_weights(ds, train_idx);

  Optimizer<float> opt(cfg);
  std::vector<TensorF*> params = model.parameters();

  TrainResult result;
  std::vector<std::int64_t> order(train_idx.begin(), train_idx.end());
  TensorF batch;
  std::vector<int> labels;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(epoch));
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::int64_t correct = 0;
    const std::int64_t n = static_cast<std::int64_t>(order.size());
    int batch_index = 0;
    for (std::int64_t at = 0; at < n; at += cfg.batch_size, ++batch_index) {
      const std::int64_t take = std::min<std::int64_t>(cfg.batch_size, n - at);
      detail::gather_batch(ds, std::span(order).subspan(static_cast<std::size_t>(at), static_cast<std::size_t>(take)),
                           batch, labels);
      nn::ForwardTrace<float> tr = model.forward_trace(batch);
      LossResult<float> lr = cross_entropy(tr.logits(), labels, cfg.loss,
                                           class_w.empty() ? std::span<const double>{} : std::span<const double>(class_w));
      if (!std::isfinite(lr.loss))
        throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_index),
                               epoch, batch_index);
      loss_sum += lr.loss * static_cast<double>(take);

      const std::int64_t k = tr.logits().shape().extent(1);
      for (std::int64_t i = 0; i < take; ++i) {
        const float* row = tr.logits().data().data() + i * k;
        int best = 0;
        for (int j = 1; j < k; ++j)
          if (row[j] > row[best]) best = j;
        if (best == labels[static_cast<std::size_t>(i)]) ++correct;
      }

      std::vector<nn::ParamGrads<float>> grads = model.backward(tr, lr.d_logits);
      std::vector<const TensorF*> flat = nn::Model<float>::flatten_grads(grads);

      if (cfg.grad_clip_norm > 0.0) {
        double sq = 0.0;
        for (const TensorF* g : flat)
          for (float v : g->data()) sq += static_cast<double>(v) * v;
        const double norm = std::sqrt(sq);
        if (norm > cfg.grad_clip_norm) {
          const float scale = static_cast<float>(cfg.grad_clip_norm / norm);
          for (const TensorF* g : flat)
            for (float& v : const_cast<TensorF*>(g)->data()) v *= scale;
        }
      }

      try {
        opt.step(params, flat);
      } catch (TrainingDiverged& e) {
        throw TrainingDiverged(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_index),
                               epoch, batch_index);
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = static_cast<float>(loss_sum / static_cast<double>(n));
    rec.train_accuracy = static_cast<float>(static_cast<double>(correct) / static_cast<double>(n));
    if (cfg.eval_per_epoch && !eval_idx.empty()) {
      std::vector<int> truth, predicted;
      predict_subset(model, ds, eval_idx, truth, predicted, cfg.batch_size);
      metrics::EvalReport er = metrics::report(metrics::confusion(truth, predicted));
      rec.eval_accuracy = static_cast<float>(er.accuracy);
      rec.eval_macro_precision = static_cast<float>(er.macro_precision);
    }
    if (sink) sink->on_epoch(rec);
    result.epochs.push_back(rec);
  }

  if (!result.epochs.empty()) {
    result.final_train_loss = result.epochs.back().train_loss;
    result.final_train_accuracy = result.epochs.back().train_accuracy;
  }
  return result;
}

}  // namespace cortex::train
