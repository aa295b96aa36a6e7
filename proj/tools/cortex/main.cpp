// Command-line front end for the MRI classification pipeline: dataset
// preparation, training, evaluation, single-image prediction and gradient
// verification.
//
// Exit codes: 0 success, 1 validation/config/topology error, 2 I/O error,
// 3 non-finite loss abort, 4 gradient-check failure. Machine-readable
// diagnostics go to stderr as `error: ...`; stdout carries `key: value`
// summary lines.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "cortex/data/dataset.hpp"
#include "cortex/data/image.hpp"
#include "cortex/error.hpp"
#include "cortex/metrics/artifacts.hpp"
#include "cortex/metrics/metrics.hpp"
#include "cortex/nn/gradcheck.hpp"
#include "cortex/nn/model.hpp"
#include "cortex/train/checkpoint.hpp"
#include "cortex/train/config.hpp"
#include "cortex/train/split.hpp"
#include "cortex/train/trainer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitGradcheck = 4;

void print_error(const std::string& msg) { std::fprintf(stderr, "error: %s\n", msg.c_str()); }

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

cortex::data::LabelMap parse_label_map(const std::string& spec) {
  cortex::data::LabelMap lm;
  std::istringstream in(spec);
  std::string name;
  int i = 0;
  while (std::getline(in, name, ',')) {
    if (i >= cortex::data::kNumClasses || name.empty())
      throw cortex::ValidationError("label map must be 4 non-empty names in id order");
    lm.names[static_cast<std::size_t>(i++)] = name;
  }
  if (i != cortex::data::kNumClasses)
    throw cortex::ValidationError("label map must name exactly 4 classes");
  return lm;
}

struct PrepareArgs {
  std::string input_dir;
  std::string output;
  std::string label_map;
};

int cmd_prepare(const PrepareArgs& args) {
  cortex::data::LabelMap labels = cortex::data::LabelMap::standard();
  if (!args.label_map.empty()) labels = parse_label_map(args.label_map);

  cortex::data::BuildSummary summary;
  cortex::data::Dataset ds = cortex::data::build_dataset(args.input_dir, labels, &summary);
  if (ds.examples.empty())
    throw cortex::ValidationError("no readable images under " + args.input_dir);
  cortex::data::save_dataset(ds, args.output);

  for (int c = 0; c < cortex::data::kNumClasses; ++c)
    std::printf("count.%s: %lld\n", labels.name_of(c).c_str(),
                static_cast<long long>(summary.per_class[static_cast<std::size_t>(c)]));
  std::printf("total: %lld\n", static_cast<long long>(summary.total));
  std::printf("skipped_count: %zu\n", summary.skipped.size());
  for (const auto& s : summary.skipped) std::printf("skipped: %s\n", s.c_str());
  for (const auto& w : summary.warnings) std::printf("warning: %s\n", w.c_str());
  std::printf("dataset_checksum: %s\n", hex64(ds.content_checksum()).c_str());
  std::printf("output: %s\n", args.output.c_str());
  return kExitOk;
}

struct TrainArgs {
  std::string dataset;
  std::string config;
  std::string out;
  std::string metrics_dir;
  std::string head = "softmax";
  double split = 0.8;
  std::optional<std::uint64_t> seed;
};

cortex::nn::HeadMode parse_head(const std::string& head) {
  if (head == "sigmoid") return cortex::nn::HeadMode::sigmoid;
  if (head == "softmax") return cortex::nn::HeadMode::softmax;
  throw cortex::ValidationError("--head must be sigmoid or softmax");
}

void check_split(double split) {
  if (!(split > 0.0) || !(split < 1.0))
    throw cortex::ValidationError("--split must be in (0,1), got " + std::to_string(split));
}

// The dataset file always stores [3,200,200]; keep the constant in one place.
void check_dataset_images(const cortex::data::Dataset& ds) {
  if (ds.examples.empty()) throw cortex::ValidationError("dataset is empty");
  const cortex::Shape want{cortex::data::kImageChannels, cortex::data::kImageSize,
                           cortex::data::kImageSize};
  if (ds.examples.front().image.shape() != want)
    throw cortex::ValidationError("dataset images are not " + want.str());
}

int cmd_train(const TrainArgs& args) {
  using namespace cortex;

  const nn::HeadMode head = parse_head(args.head);
  check_split(args.split);

  train::TrainConfig cfg;
  bool loss_from_config = false;
  if (!args.config.empty()) {
    std::ifstream in(args.config);
    if (!in) throw IoError("cannot open config file: " + args.config);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    cfg = train::TrainConfig::from_text(text);
    loss_from_config = train::config_text_has_key(text, "loss");
  }
  // Flags beat file values; the loss default follows the head unless the
  // config file pinned it.
  if (args.seed) cfg.seed = *args.seed;
  if (!loss_from_config)
    cfg.loss = head == nn::HeadMode::sigmoid ? train::LossKind::per_class_bce
                                             : train::LossKind::categorical_ce;
  cfg.validate();

  data::Dataset ds = data::load_dataset(args.dataset);
  check_dataset_images(ds);
  const std::uint64_t ds_checksum = ds.content_checksum();

  train::SplitIndices split = train::split_dataset(ds.size(), args.split, cfg.seed);

  nn::Model<float> model = nn::build_paper_model<float>(
      head, data::kImageSize, data::kImageSize, cfg.seed, data::kImageChannels);

  metrics::CurveLog log;
  train::TrainResult result;
  try {
    result = train::train(model, ds, split.train, cfg, &log, split.test);
  } catch (const TrainingDiverged& e) {
    print_error(e.what());
    return kExitDiverged;
  }

  std::vector<int> truth, predicted;
  train::predict_subset(model, ds, split.test, truth, predicted, cfg.batch_size);
  metrics::EvalReport report = metrics::report(metrics::confusion(truth, predicted));

  train::CheckpointMeta meta;
  meta.epoch = cfg.epochs;
  meta.seed = cfg.seed;
  meta.config_hash = cfg.hash();
  meta.labels.assign(ds.labels.names.begin(), ds.labels.names.end());
  train::save_checkpoint(model, args.out, meta);

  metrics::emit_artifacts(log, &report, args.metrics_dir, ds.labels);
  {
    // Echo of the effective config, for auditability of flag/file precedence.
    std::ofstream cfg_out(std::filesystem::path(args.metrics_dir) / "config.txt");
    cfg_out << cfg.canonical_text();
  }

  std::printf("dataset_checksum: %s\n", hex64(ds_checksum).c_str());
  std::printf("train_examples: %zu\n", split.train.size());
  std::printf("test_examples: %zu\n", split.test.size());
  std::printf("test_membership_hash: %s\n", hex64(train::membership_hash(split.test)).c_str());
  std::printf("final_train_loss: %.9g\n", result.final_train_loss);
  std::printf("final_train_accuracy: %.9g\n", result.final_train_accuracy);
  std::printf("eval_accuracy: %.9g\n", report.accuracy);
  std::printf("eval_macro_precision: %.9g\n", report.macro_precision);
  std::printf("config_hash: %s\n", hex64(cfg.hash()).c_str());
  std::printf("checkpoint: %s\n", args.out.c_str());
  std::printf("metrics_dir: %s\n", args.metrics_dir.c_str());
  return kExitOk;
}

struct EvaluateArgs {
  std::string dataset;
  std::string checkpoint;
  std::string metrics_dir;
  std::string subset = "test";
  double split = 0.8;
  std::uint64_t seed = 1;
};

int cmd_evaluate(const EvaluateArgs& args) {
  using namespace cortex;
  check_split(args.split);
  if (args.subset != "test" && args.subset != "all")
    throw ValidationError("--subset must be test or all");

  train::CheckpointMeta meta;
  nn::Model<float> model = train::load_checkpoint<float>(args.checkpoint, &meta);
  data::Dataset ds = data::load_dataset(args.dataset);
  check_dataset_images(ds);

  const Shape ds_spec{data::kImageChannels, data::kImageSize, data::kImageSize};
  if (model.input_spec != ds_spec) {
    print_error("topology mismatch: checkpoint expects input " + model.input_spec.str() +
                ", dataset provides " + ds_spec.str());
    return kExitValidation;
  }

  train::SplitIndices split = train::split_dataset(ds.size(), args.split, args.seed);
  std::vector<std::int64_t> chosen;
  if (args.subset == "test") {
    chosen = split.test;
  } else {
    chosen.resize(static_cast<std::size_t>(ds.size()));
    for (std::int64_t i = 0; i < ds.size(); ++i) chosen[static_cast<std::size_t>(i)] = i;
  }

  std::vector<int> truth, predicted;
  train::predict_subset(model, ds, chosen, truth, predicted);
  metrics::EvalReport report = metrics::report(metrics::confusion(truth, predicted));

  metrics::CurveLog empty_log;
  metrics::emit_artifacts(empty_log, &report, args.metrics_dir, ds.labels);

  std::printf("dataset_checksum: %s\n", hex64(ds.content_checksum()).c_str());
  std::printf("subset: %s\n", args.subset.c_str());
  std::printf("examples: %zu\n", chosen.size());
  std::printf("test_membership_hash: %s\n",
              hex64(train::membership_hash(args.subset == "test"
                                               ? std::span<const std::int64_t>(split.test)
                                               : std::span<const std::int64_t>(chosen)))
                  .c_str());
  std::printf("confusion_total: %lld\n", static_cast<long long>(report.confusion.total()));
  std::printf("accuracy: %.9g\n", report.accuracy);
  std::printf("macro_precision: %.9g\n", report.macro_precision);
  std::printf("micro_precision: %.9g\n", report.micro_precision);
  std::printf("metrics_dir: %s\n", args.metrics_dir.c_str());
  return kExitOk;
}

struct PredictArgs {
  std::string image;
  std::string checkpoint;
};

int cmd_predict(const PredictArgs& args) {
  using namespace cortex;

  train::CheckpointMeta meta;
  nn::Model<float> model = train::load_checkpoint<float>(args.checkpoint, &meta);

  data::LabelMap labels = data::LabelMap::standard();
  if (meta.labels.size() == data::kNumClasses)
    for (int i = 0; i < data::kNumClasses; ++i)
      labels.names[static_cast<std::size_t>(i)] = meta.labels[static_cast<std::size_t>(i)];

  data::ImageU8 img = data::load_image_file(args.image);
  img = data::resize_bilinear(img, static_cast<int>(model.input_spec.extent(1)),
                              static_cast<int>(model.input_spec.extent(2)));
  TensorF chw = data::normalize(img);
  TensorF batch(Shape{1, chw.shape().extent(0), chw.shape().extent(1), chw.shape().extent(2)},
                std::vector<float>(chw.data().begin(), chw.data().end()));

  TensorF scores = model.scores(batch);
  const std::vector<int> cls = metrics::predict_class(scores);
  std::printf("class: %s\n", labels.name_of(cls.at(0)).c_str());
  for (int i = 0; i < data::kNumClasses; ++i)
    std::printf("score.%s: %.9g\n", labels.name_of(i).c_str(), scores.at(0, i));
  std::printf("head: %s\n", model.head == nn::HeadMode::sigmoid ? "sigmoid" : "softmax");
  return kExitOk;
}

struct GradcheckArgs {
  std::uint64_t seed = 1;
  std::string layer = "all";
  bool inject_fault = false;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  using namespace cortex;
  const auto filter = nn::gradcheck::parse_filter(args.layer);
  const auto results = nn::gradcheck::run_suite(args.seed, filter, args.inject_fault);
  bool ok = true;
  const nn::gradcheck::CheckResult* worst = nullptr;
  for (const auto& r : results) {
    std::printf("%s: %.3e\n", r.name.c_str(), r.max_rel_err);
    if (!r.pass && (!worst || r.max_rel_err > worst->max_rel_err)) worst = &r;
    ok = ok && r.pass;
  }
  std::printf("tolerance: %.1e\n", nn::gradcheck::kTolerance);
  std::printf("gradcheck: %s\n", ok ? "pass" : "fail");
  if (!ok && worst) {
    print_error("gradient check failed for " + worst->name + " at coordinate " +
                std::to_string(worst->worst_coordinate) + " (max relative error " +
                std::to_string(worst->max_rel_err) + ")");
    return kExitGradcheck;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"from-scratch CNN pipeline for 4-class brain-MRI classification"};
  app.require_subcommand(1);

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "build a dataset file from a labeled image tree");
  prepare->add_option("--input-dir", prep.input_dir, "root with one folder per class")->required();
  prepare->add_option("--output", prep.output, "dataset file to write")->required();
  prepare->add_option("--label-map", prep.label_map,
                      "override class names, comma-separated in id order");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train the network on a dataset file");
  train_cmd->add_option("--dataset", tr.dataset, "dataset file")->required();
  train_cmd->add_option("--config", tr.config, "key = value training config file");
  train_cmd->add_option("--seed", tr.seed, "seed override");
  train_cmd->add_option("--out", tr.out, "checkpoint to write")->required();
  train_cmd->add_option("--metrics-dir", tr.metrics_dir, "directory for metrics artifacts")
      ->required();
  train_cmd->add_option("--head", tr.head, "output head: sigmoid|softmax");
  train_cmd->add_option("--split", tr.split, "train fraction (default 0.8)");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on the held-out split");
  evaluate->add_option("--dataset", ev.dataset, "dataset file")->required();
  evaluate->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required();
  evaluate->add_option("--metrics-dir", ev.metrics_dir, "directory for metrics artifacts")
      ->required();
  evaluate->add_option("--subset", ev.subset, "test|all (default test)");
  evaluate->add_option("--seed", ev.seed, "split seed (must match training)");
  evaluate->add_option("--split", ev.split, "train fraction (must match training)");

  PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "classify a single image");
  predict->add_option("--image", pr.image, "PNG or JPEG file")->required();
  predict->add_option("--checkpoint", pr.checkpoint, "checkpoint file")->required();

  GradcheckArgs gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  gradcheck->add_option("--seed", gc.seed, "randomization seed");
  gradcheck->add_option("--layer", gc.layer, "all|conv|pool|dense|activations");
  gradcheck->add_flag("--inject-fault", gc.inject_fault, "corrupt one gradient (harness self-test)")
      ->group("");  // hidden

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    print_error(e.what());
    return kExitValidation;
  }

  try {
    if (prepare->parsed()) return cmd_prepare(prep);
    if (train_cmd->parsed()) return cmd_train(tr);
    if (evaluate->parsed()) return cmd_evaluate(ev);
    if (predict->parsed()) return cmd_predict(pr);
    if (gradcheck->parsed()) return cmd_gradcheck(gc);
  } catch (const cortex::ValidationError& e) {
    print_error(e.what());
    return kExitValidation;
  } catch (const cortex::ShapeError& e) {
    print_error(e.what());
    return kExitValidation;
  } catch (const cortex::IoError& e) {
    print_error(e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    print_error(e.what());
    return kExitValidation;
  }
  return kExitValidation;
}
