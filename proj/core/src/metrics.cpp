#include "cortex/metrics/metrics.hpp"

#include "cortex/error.hpp"

namespace cortex::metrics {

std::vector<int> predict_class(const TensorF& outputs) {
  if (outputs.shape().rank() != 2 || outputs.shape().extent(1) != data::kNumClasses)
    throw ShapeError("predict_class expects [N,4] outputs, got " + outputs.shape().str());
  const std::int64_t n = outputs.shape().extent(0);
  const std::int64_t k = outputs.shape().extent(1);
  std::vector<int> labels(static_cast<std::size_t>(n));
  const float* p = outputs.data().data();
  for (std::int64_t i = 0; i < n; ++i) {
    const float* row = p + i * k;
    int best = 0;
    for (int j = 1; j < k; ++j)
      if (row[j] > row[best]) best = j;  // strict >: ties keep the lowest id
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts)
    for (auto v : row) t += v;
  return t;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (int i = 0; i < data::kNumClasses; ++i)
    t += counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
  return t;
}

std::int64_t ConfusionMatrix::row_sum(int truth) const {
  std::int64_t t = 0;
  for (auto v : counts.at(static_cast<std::size_t>(truth))) t += v;
  return t;
}

std::int64_t ConfusionMatrix::col_sum(int predicted) const {
  std::int64_t t = 0;
  for (const auto& row : counts) t += row.at(static_cast<std::size_t>(predicted));
  return t;
}

ConfusionMatrix confusion(std::span<const int> true_labels,
                          std::span<const int> predicted_labels) {
  if (true_labels.size() != predicted_labels.size())
    throw ValidationError("confusion: label vectors differ in length");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    const int t = true_labels[i];
    const int p = predicted_labels[i];
    if (t < 0 || t >= data::kNumClasses || p < 0 || p >= data::kNumClasses)
      throw ValidationError("confusion: label outside 0..3");
    m.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]++;
  }
  return m;
}

EvalReport report(const ConfusionMatrix& m) {
  const std::int64_t total = m.total();
  if (total <= 0) throw ValidationError("report: confusion matrix is empty");

  EvalReport r;
  r.confusion = m;
  r.accuracy = static_cast<double>(m.trace()) / static_cast<double>(total);
  r.micro_precision = r.accuracy;

  double precision_sum = 0.0;
  int defined = 0;
  for (int c = 0; c < data::kNumClasses; ++c) {
    const std::int64_t col = m.col_sum(c);
    const std::int64_t row = m.row_sum(c);
    const std::int64_t hit = m.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    if (col > 0) {
      const double p = static_cast<double>(hit) / static_cast<double>(col);
      r.per_class_precision[static_cast<std::size_t>(c)] = p;
      precision_sum += p;
      ++defined;
    }
    if (row > 0)
      r.per_class_recall[static_cast<std::size_t>(c)] =
          static_cast<double>(hit) / static_cast<double>(row);
  }
  r.macro_precision = defined > 0 ? precision_sum / defined : 0.0;
  return r;
}

}  // namespace cortex::metrics
