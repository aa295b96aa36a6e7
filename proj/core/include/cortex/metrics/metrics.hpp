#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "cortex/data/dataset.hpp"
#include "cortex/tensor.hpp"

namespace cortex::metrics {

// Argmax per row; ties break toward the lowest class id. Works on logits or
// head scores alike, since argmax ignores monotone transforms.
std::vector<int> predict_class(const TensorF& outputs);

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, data::kNumClasses>, data::kNumClasses> counts{};

  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t row_sum(int truth) const;
  std::int64_t col_sum(int predicted) const;
};

ConfusionMatrix confusion(std::span<const int> true_labels,
                          std::span<const int> predicted_labels);

// Derived statistics. Per-class precision is undefined (nullopt) when the
// class was never predicted; such classes are excluded from the macro mean.
// micro_precision equals accuracy for single-label classification and is
// reported alongside for comparability.
struct EvalReport {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::array<std::optional<double>, data::kNumClasses> per_class_precision;
  std::array<std::optional<double>, data::kNumClasses> per_class_recall;
  double macro_precision = 0.0;
  double micro_precision = 0.0;
};

EvalReport report(const ConfusionMatrix& m);

}  // namespace cortex::metrics
