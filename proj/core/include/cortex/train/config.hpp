#pragma once

#include <cstdint>
#include <string>

namespace cortex::train {

enum class OptimizerKind { sgd, sgd_momentum, adam };

enum class LossKind {
  categorical_ce,  // softmax over the outputs, mean NLL of the true class
  per_class_bce,   // mean over classes of BCE(sigmoid(z_c), one_hot_c)
};

// Training hyperparameters. The flat key = value file format and the CLI
// flags both funnel into this struct; flags win over file values.
struct TrainConfig {
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  double momentum_beta = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  LossKind loss = LossKind::categorical_ce;
  bool determinism = true;
  double grad_clip_norm = 0.0;     // 0 disables clipping
  bool class_weights = false;      // inverse-frequency reweighting
  bool eval_per_epoch = false;     // also log held-out metrics each epoch

  // Throws ValidationError when a field is out of range.
  void validate() const;

  // Parses `key = value` lines; '#' starts a comment. Unknown keys and
  // malformed values raise ValidationError naming the line.
  static TrainConfig from_file(const std::string& path);
  static TrainConfig from_text(const std::string& text);
  void set(const std::string& key, const std::string& value);

  // Canonical serialization: every field, fixed order. Same text -> same
  // hash; the hash is recorded in checkpoints.
  std::string canonical_text() const;
  std::uint64_t hash() const;
};

const char* optimizer_name(OptimizerKind k);
const char* loss_name(LossKind k);

// True when the config text assigns `key` (comments ignored).
bool config_text_has_key(const std::string& text, const std::string& key);

}  // namespace cortex::train
