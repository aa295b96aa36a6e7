#include "cortex/train/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cortex/error.hpp"
#include "cortex/io/binary.hpp"

namespace cortex::train {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ValidationError("config: bad integer for " + key + ": '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ValidationError("config: bad unsigned integer for " + key + ": '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ValidationError("config: bad real for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ValidationError("config: bad boolean for " + key + ": '" + v + "'");
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

const char* optimizer_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::sgd_momentum: return "sgd-momentum";
    case OptimizerKind::adam: return "adam";
  }
  return "?";
}

const char* loss_name(LossKind k) {
  return k == LossKind::categorical_ce ? "categorical-cross-entropy"
                                       : "per-class-binary-cross-entropy";
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ValidationError("config: epochs must be >= 0");
  if (batch_size < 1) throw ValidationError("config: batch_size must be >= 1");
  if (!(learning_rate > 0)) throw ValidationError("config: learning_rate must be > 0");
  if (momentum_beta < 0 || momentum_beta >= 1)
    throw ValidationError("config: momentum_beta must be in [0,1)");
  if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1)
    throw ValidationError("config: adam betas must be in [0,1)");
  if (!(adam_eps > 0)) throw ValidationError("config: adam_eps must be > 0");
  if (grad_clip_norm < 0) throw ValidationError("config: grad_clip_norm must be >= 0");
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "epochs") {
    epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "batch_size") {
    batch_size = static_cast<int>(parse_int(key, value));
  } else if (key == "learning_rate") {
    learning_rate = parse_real(key, value);
  } else if (key == "optimizer") {
    if (value == "sgd") optimizer = OptimizerKind::sgd;
    else if (value == "sgd-momentum") optimizer = OptimizerKind::sgd_momentum;
    else if (value == "adam") optimizer = OptimizerKind::adam;
    else throw ValidationError("config: unknown optimizer '" + value + "'");
  } else if (key == "momentum_beta") {
    momentum_beta = parse_real(key, value);
  } else if (key == "adam_beta1") {
    adam_beta1 = parse_real(key, value);
  } else if (key == "adam_beta2") {
    adam_beta2 = parse_real(key, value);
  } else if (key == "adam_eps") {
    adam_eps = parse_real(key, value);
  } else if (key == "seed") {
    seed = parse_u64(key, value);
  } else if (key == "loss") {
    if (value == "categorical-cross-entropy") loss = LossKind::categorical_ce;
    else if (value == "per-class-binary-cross-entropy") loss = LossKind::per_class_bce;
    else throw ValidationError("config: unknown loss '" + value + "'");
  } else if (key == "determinism") {
    determinism = parse_bool(key, value);
  } else if (key == "grad_clip_norm") {
    grad_clip_norm = parse_real(key, value);
  } else if (key == "class_weights") {
    if (value == "none") class_weights = false;
    else if (value == "inverse-frequency") class_weights = true;
    else throw ValidationError("config: class_weights must be none or inverse-frequency");
  } else if (key == "eval_per_epoch") {
    eval_per_epoch = parse_bool(key, value);
  } else {
    throw ValidationError("config: unknown key '" + key + "'");
  }
}

TrainConfig TrainConfig::from_text(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config: line " + std::to_string(lineno) +
                            " is not 'key = value'");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

TrainConfig TrainConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

std::string TrainConfig::canonical_text() const {
  std::ostringstream os;
  os << "epochs = " << epochs << "\n";
  os << "batch_size = " << batch_size << "\n";
  os << "learning_rate = " << format_real(learning_rate) << "\n";
  os << "optimizer = " << optimizer_name(optimizer) << "\n";
  os << "momentum_beta = " << format_real(momentum_beta) << "\n";
  os << "adam_beta1 = " << format_real(adam_beta1) << "\n";
  os << "adam_beta2 = " << format_real(adam_beta2) << "\n";
  os << "adam_eps = " << format_real(adam_eps) << "\n";
  os << "seed = " << seed << "\n";
  os << "loss = " << loss_name(loss) << "\n";
  os << "determinism = " << (determinism ? "true" : "false") << "\n";
  os << "grad_clip_norm = " << format_real(grad_clip_norm) << "\n";
  os << "class_weights = " << (class_weights ? "inverse-frequency" : "none") << "\n";
  os << "eval_per_epoch = " << (eval_per_epoch ? "true" : "false") << "\n";
  return os.str();
}

std::uint64_t TrainConfig::hash() const { return io::fnv1a(canonical_text()); }

bool config_text_has_key(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    if (trim(line.substr(0, eq)) == key) return true;
  }
  return false;
}

}  // namespace cortex::train
