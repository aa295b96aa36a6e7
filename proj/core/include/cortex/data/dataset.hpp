#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cortex/tensor.hpp"

namespace cortex::data {

inline constexpr int kNumClasses = 4;
inline constexpr std::int64_t kImageChannels = 3;
inline constexpr std::int64_t kImageSize = 200;  // dataset files store 200x200

// Class names in label order: 0 healthy, 1 glioma, 2 meningioma, 3 pituitary.
struct LabelMap {
  std::array<std::string, kNumClasses> names;

  static LabelMap standard() {
    return LabelMap{{"healthy", "glioma", "meningioma", "pituitary"}};
  }
  const std::string& name_of(int id) const { return names.at(static_cast<std::size_t>(id)); }
  int id_of(const std::string& name) const {
    for (int i = 0; i < kNumClasses; ++i)
      if (names[static_cast<std::size_t>(i)] == name) return i;
    return -1;
  }
  bool operator==(const LabelMap&) const = default;
};

// One labeled image: channels-first pixels in [0,1] plus its origin name.
struct Example {
  TensorF image;  // [3,H,W]
  int label = 0;
  std::string source_id;
};

struct Dataset {
  LabelMap labels = LabelMap::standard();
  std::vector<Example> examples;

  std::int64_t size() const { return static_cast<std::int64_t>(examples.size()); }
  std::array<std::int64_t, kNumClasses> class_counts() const;

  // Checksum of the canonical serialized form (same bytes save_dataset
  // writes). Printed by the CLI to detect dataset drift between runs.
  std::uint64_t content_checksum() const;
};

struct BuildSummary {
  std::array<std::int64_t, kNumClasses> per_class{};
  std::vector<std::string> skipped;  // "path (reason)"
  std::vector<std::string> warnings;
  std::int64_t total = 0;
};

// Walks root/<class-name>/ for every label-map class, decoding, resizing to
// 200x200 and normalizing each readable image. Examples are ordered by
// (class, filename); unreadable files are skipped and reported. A missing
// class directory is a ValidationError; an empty one only warns.
Dataset build_dataset(const std::string& root_dir, const LabelMap& labels,
                      BuildSummary* summary = nullptr);

// Serialized container: magic "CFDS", u16 version, label-map block, u32
// count, fixed-stride records (u8 label + 3*200*200 LE f32 pixels), trailing
// u64 FNV-1a checksum of all preceding bytes.
void save_dataset(const Dataset& ds, const std::string& path);

// Verifies magic/version/checksum and re-validates pixel and label ranges.
Dataset load_dataset(const std::string& path);

// Materializes the subset selected by `indices`, preserving order.
Dataset subset(const Dataset& ds, const std::vector<std::int64_t>& indices);

}  // namespace cortex::data
