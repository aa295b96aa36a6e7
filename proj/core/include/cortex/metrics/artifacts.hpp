#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cortex/data/dataset.hpp"
#include "cortex/metrics/metrics.hpp"
#include "cortex/train/trainer.hpp"

namespace cortex::metrics {

// Ordered per-epoch records; plugs into the trainer as its metrics sink.
class CurveLog : public train::MetricsSink {
 public:
  void on_epoch(const train::EpochRecord& rec) override;
  const std::vector<train::EpochRecord>& records() const { return records_; }
  bool has_eval_columns() const;

 private:
  std::vector<train::EpochRecord> records_;
};

// Parses a curves.csv previously written by emit_artifacts.
std::vector<train::EpochRecord> parse_curves_csv(const std::string& path);

// Writes the evaluation artifacts into out_dir:
//   curves.csv      epoch,train_loss,train_accuracy[,eval_...] rows (%.9g)
//   confusion.csv   class names as header row/column, integer cells
//   report.txt      human-readable summary
//   accuracy.svg / loss.svg / confusion.svg   self-contained vector plots
// Curve plots are omitted (with a notice in report.txt) when the log is
// empty; confusion artifacts are omitted when report is absent. Files are
// written whole via a temp-and-rename, so failures leave no partial output.
void emit_artifacts(const CurveLog& curves, const EvalReport* report,
                    const std::string& out_dir,
                    const data::LabelMap& labels = data::LabelMap::standard());

}  // namespace cortex::metrics
