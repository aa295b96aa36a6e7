#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "cortex/io/binary.hpp"
#include "cortex/nn/model.hpp"

namespace cortex::train {

// Checkpoint file: magic "CFCK", u16 version, topology descriptor, u64
// topology hash, per-layer parameter tensors (dtype tag, shape, raw LE
// scalars; weights then bias, layer order), then a u64 length-prefixed
// metadata text block. Serialization is canonical, so save -> load -> save
// reproduces the file byte for byte.
inline constexpr char kCheckpointMagic[4] = {'C', 'F', 'C', 'K'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::int64_t epoch = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<std::string> labels;  // class names in label order

  std::string to_text() const {
    std::ostringstream os;
    os << "epoch=" << epoch << "\n";
    os << "seed=" << seed << "\n";
    os << "config_hash=" << config_hash << "\n";
    os << "labels=";
    for (std::size_t i = 0; i < labels.size(); ++i) os << (i ? "," : "") << labels[i];
    os << "\n";
    return os.str();
  }

  static CheckpointMeta from_text(const std::string& text) {
    CheckpointMeta m;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      if (key == "epoch") m.epoch = std::stoll(value);
      else if (key == "seed") m.seed = std::stoull(value);
      else if (key == "config_hash") m.config_hash = std::stoull(value);
      else if (key == "labels") {
        std::istringstream ls(value);
        std::string name;
        while (std::getline(ls, name, ',')) m.labels.push_back(name);
      }
    }
    return m;
  }
};

namespace detail {

enum : std::uint8_t { kKindConv = 1, kKindPool = 2, kKindFlatten = 3, kKindDense = 4 };

template <std::floating_point T>
void serialize_topology(const nn::Model<T>& m, io::Sink& sink) {
  sink.put_u8(m.head == nn::HeadMode::sigmoid ? 0 : 1);
  sink.put_u32(static_cast<std::uint32_t>(m.input_spec.extent(0)));
  sink.put_u32(static_cast<std::uint32_t>(m.input_spec.extent(1)));
  sink.put_u32(static_cast<std::uint32_t>(m.input_spec.extent(2)));
  sink.put_u32(static_cast<std::uint32_t>(m.layers.size()));
  for (const auto& layer : m.layers) {
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, nn::Conv2d<T>>) {
            sink.put_u8(kKindConv);
            sink.put_u32(static_cast<std::uint32_t>(l.out_channels()));
            sink.put_u32(static_cast<std::uint32_t>(l.in_channels()));
            sink.put_u32(3);
            sink.put_u32(3);
            sink.put_u8(l.relu ? 1 : 0);
          } else if constexpr (std::is_same_v<L, nn::MaxPool2d<T>>) {
            sink.put_u8(kKindPool);
          } else if constexpr (std::is_same_v<L, nn::Flatten<T>>) {
            sink.put_u8(kKindFlatten);
          } else {
            sink.put_u8(kKindDense);
            sink.put_u32(static_cast<std::uint32_t>(l.in_features()));
            sink.put_u32(static_cast<std::uint32_t>(l.out_features()));
            sink.put_u8(l.act == nn::Activation::relu ? 1 : 0);
          }
        },
        layer);
  }
}

// Reads the descriptor and reconstructs a zero-parameter model skeleton.
template <std::floating_point T>
nn::Model<T> parse_topology(io::Reader& in) {
  nn::Model<T> m;
  m.head = in.get_u8() == 0 ? nn::HeadMode::sigmoid : nn::HeadMode::softmax;
  const std::int64_t c = in.get_u32();
  const std::int64_t h = in.get_u32();
  const std::int64_t w = in.get_u32();
  m.input_spec = Shape{c, h, w};
  const std::uint32_t count = in.get_u32();
  if (count > 1024) throw IoError("checkpoint: implausible layer count");
  for (std::uint32_t i = 0; i < count; ++i) {
    switch (in.get_u8()) {
      case kKindConv: {
        const std::int64_t out_c = in.get_u32();
        const std::int64_t in_c = in.get_u32();
        const std::int64_t kh = in.get_u32();
        const std::int64_t kw = in.get_u32();
        const bool relu = in.get_u8() != 0;
        if (kh != 3 || kw != 3) throw IoError("checkpoint: unsupported kernel size");
        m.layers.emplace_back(nn::Conv2d<T>(Tensor<T>(Shape{out_c, in_c, 3, 3}),
                                            Tensor<T>(Shape{out_c}), relu));
        break;
      }
      case kKindPool:
        m.layers.emplace_back(nn::MaxPool2d<T>{});
        break;
      case kKindFlatten:
        m.layers.emplace_back(nn::Flatten<T>{});
        break;
      case kKindDense: {
        const std::int64_t in_f = in.get_u32();
        const std::int64_t out_f = in.get_u32();
        const bool relu = in.get_u8() != 0;
        m.layers.emplace_back(nn::Dense<T>(Tensor<T>(Shape{in_f, out_f}), Tensor<T>(Shape{out_f}),
                                           relu ? nn::Activation::relu : nn::Activation::none));
        break;
      }
      default:
        throw IoError("checkpoint: unknown layer kind tag");
    }
  }
  return m;
}

template <std::floating_point T>
std::uint64_t topology_hash(const nn::Model<T>& m) {
  io::HashSink hs;
  serialize_topology(m, hs);
  return hs.checksum();
}

template <std::floating_point T>
void put_tensor(io::Sink& sink, const Tensor<T>& t) {
  sink.put_u8(std::is_same_v<T, float> ? 0 : 1);
  sink.put_u8(static_cast<std::uint8_t>(t.shape().rank()));
  for (int i = 0; i < t.shape().rank(); ++i)
    sink.put_u32(static_cast<std::uint32_t>(t.shape().extent(i)));
  if constexpr (std::is_same_v<T, float>)
    sink.put_f32_array(t.data().data(), static_cast<std::size_t>(t.size()));
  else
    sink.put_f64_array(t.data().data(), static_cast<std::size_t>(t.size()));
}

template <std::floating_point T>
void get_tensor_into(io::Reader& in, Tensor<T>& t) {
  const std::uint8_t dtype = in.get_u8();
  const std::uint8_t want = std::is_same_v<T, float> ? 0 : 1;
  if (dtype != want) throw IoError("checkpoint: parameter dtype mismatch");
  const int rank = in.get_u8();
  if (rank < 1 || rank > 4) throw IoError("checkpoint: bad tensor rank");
  std::vector<std::int64_t> dims;
  for (int i = 0; i < rank; ++i) dims.push_back(in.get_u32());
  const Shape s(dims);
  if (s != t.shape())
    throw IoError("checkpoint: parameter shape " + s.str() + " does not match topology " +
                  t.shape().str());
  if constexpr (std::is_same_v<T, float>)
    in.get_f32_array(t.data().data(), static_cast<std::size_t>(t.size()));
  else
    in.get_f64_array(t.data().data(), static_cast<std::size_t>(t.size()));
}

}  // namespace detail

template <std::floating_point T>
void save_checkpoint(const nn::Model<T>& model, const std::string& path,
                     const CheckpointMeta& meta = {}) {
  io::FileSink out(path);
  out.write(kCheckpointMagic, 4);
  out.put_u16(kCheckpointVersion);

  io::VectorSink topo;
  detail::serialize_topology(model, topo);
  out.write(topo.bytes().data(), topo.bytes().size());
  out.put_u64(io::fnv1a(topo.bytes().data(), topo.bytes().size()));

  for (const auto& layer : model.layers) {
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, nn::Conv2d<T>> || std::is_same_v<L, nn::Dense<T>>) {
            detail::put_tensor(out, l.weights);
            detail::put_tensor(out, l.bias);
          }
        },
        layer);
  }

  const std::string text = meta.to_text();
  out.put_u64(text.size());
  out.write(text.data(), text.size());
  out.close();
}

template <std::floating_point T>
nn::Model<T> load_checkpoint(const std::string& path, CheckpointMeta* meta_out = nullptr) {
  io::FileReader in(path);
  char magic[4];
  in.read(magic, 4);
  if (std::string(magic, 4) != std::string(kCheckpointMagic, 4))
    throw IoError("checkpoint: bad magic, not a checkpoint file");
  const std::uint16_t version = in.get_u16();
  if (version != kCheckpointVersion)
    throw IoError("checkpoint: unsupported version " + std::to_string(version));

  nn::Model<T> m = detail::parse_topology<T>(in);
  const std::uint64_t stored_hash = in.get_u64();
  if (stored_hash != detail::topology_hash(m))
    throw IoError("checkpoint: topology hash mismatch");

  for (auto& layer : m.layers) {
    std::visit(
        [&](auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, nn::Conv2d<T>> || std::is_same_v<L, nn::Dense<T>>) {
            detail::get_tensor_into(in, l.weights);
            detail::get_tensor_into(in, l.bias);
          }
        },
        layer);
  }

  const std::uint64_t meta_len = in.get_u64();
  if (meta_len > (1u << 20)) throw IoError("checkpoint: implausible metadata size");
  std::string text(static_cast<std::size_t>(meta_len), '\0');
  in.read(text.data(), text.size());
  if (!in.at_end()) throw IoError("checkpoint: trailing bytes after metadata");
  if (meta_out) *meta_out = CheckpointMeta::from_text(text);
  return m;
}

}  // namespace cortex::train
