#include "cortex/data/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>

#include "cortex/data/image.hpp"
#include "cortex/error.hpp"
#include "cortex/io/binary.hpp"
#include "cortex/parallel.hpp"

namespace cortex::data {
namespace {

constexpr char kMagic[4] = {'C', 'F', 'D', 'S'};
constexpr std::uint16_t kVersion = 1;
constexpr std::int64_t kPixelsPerExample = kImageChannels * kImageSize * kImageSize;

void write_body(const Dataset& ds, io::Sink& out) {
  out.write(kMagic, 4);
  out.put_u16(kVersion);
  for (const auto& name : ds.labels.names) out.put_string(name);
  out.put_u32(static_cast<std::uint32_t>(ds.examples.size()));
  const Shape want{kImageChannels, kImageSize, kImageSize};
  for (const auto& ex : ds.examples) {
    if (ex.image.shape() != want)
      throw ValidationError("dataset file stores " + want.str() + " images, got " +
                            ex.image.shape().str());
    if (ex.label < 0 || ex.label >= kNumClasses)
      throw ValidationError("dataset: label outside 0..3");
    out.put_u8(static_cast<std::uint8_t>(ex.label));
    out.put_f32_array(ex.image.data().data(), static_cast<std::size_t>(ex.image.size()));
  }
}

bool has_image_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

std::array<std::int64_t, kNumClasses> Dataset::class_counts() const {
  std::array<std::int64_t, kNumClasses> counts{};
  for (const auto& ex : examples) counts.at(static_cast<std::size_t>(ex.label))++;
  return counts;
}

std::uint64_t Dataset::content_checksum() const {
  io::HashSink sink;
  write_body(*this, sink);
  return sink.checksum();
}

void save_dataset(const Dataset& ds, const std::string& path) {
  io::FileSink out(path);
  write_body(ds, out);
  out.put_u64(out.checksum());  // checksum covers every byte before it
  out.close();
}

Dataset load_dataset(const std::string& path) {
  io::FileReader in(path);
  char magic[4];
  in.read(magic, 4);
  if (std::string(magic, 4) != std::string(kMagic, 4))
    throw IoError("dataset: bad magic, not a dataset file: " + path);
  const std::uint16_t version = in.get_u16();
  if (version != kVersion)
    throw IoError("dataset: unsupported version " + std::to_string(version));

  Dataset ds;
  for (auto& name : ds.labels.names) name = in.get_string();
  const std::uint32_t count = in.get_u32();
  ds.examples.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Example ex;
    ex.label = in.get_u8();
    if (ex.label >= kNumClasses) throw IoError("dataset: label outside 0..3");
    ex.image = TensorF(Shape{kImageChannels, kImageSize, kImageSize});
    in.get_f32_array(ex.image.data().data(), static_cast<std::size_t>(kPixelsPerExample));
    for (float v : ex.image.data()) {
      if (!(v >= 0.0f && v <= 1.0f))
        throw IoError("dataset: pixel value outside [0,1] in example " + std::to_string(i));
    }
    ex.source_id = "#" + std::to_string(i);
    ds.examples.push_back(std::move(ex));
  }
  const std::uint64_t computed = in.checksum();
  const std::uint64_t stored = in.get_u64();
  if (computed != stored) throw IoError("dataset: checksum mismatch, file is corrupted");
  if (!in.at_end()) throw IoError("dataset: trailing bytes after checksum");
  return ds;
}

Dataset subset(const Dataset& ds, const std::vector<std::int64_t>& indices) {
  Dataset out;
  out.labels = ds.labels;
  out.examples.reserve(indices.size());
  for (auto i : indices) out.examples.push_back(ds.examples.at(static_cast<std::size_t>(i)));
  return out;
}

Dataset build_dataset(const std::string& root_dir, const LabelMap& labels,
                      BuildSummary* summary) {
  namespace fs = std::filesystem;

  struct Job {
    fs::path path;
    int label;
  };
  std::vector<Job> jobs;
  BuildSummary local;

  for (int c = 0; c < kNumClasses; ++c) {
    const fs::path dir = fs::path(root_dir) / labels.names[static_cast<std::size_t>(c)];
    if (!fs::is_directory(dir))
      throw ValidationError("missing class directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && has_image_extension(entry.path()))
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());  // deterministic (class, filename) order
    if (files.empty())
      local.warnings.push_back("class '" + labels.names[static_cast<std::size_t>(c)] +
                               "' has no images");
    for (auto& f : files) jobs.push_back({std::move(f), c});
  }

  struct Slot {
    std::optional<Example> example;
    std::string error;
  };
  std::vector<Slot> slots(jobs.size());

  parallel_for(static_cast<std::int64_t>(jobs.size()), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      const Job& job = jobs[static_cast<std::size_t>(i)];
      try {
        ImageU8 img = load_image_file(job.path.string());
        img = resize_bilinear(img, static_cast<int>(kImageSize), static_cast<int>(kImageSize));
        Example ex;
        ex.image = normalize(img);
        ex.label = job.label;
        ex.source_id = fs::relative(job.path, root_dir).generic_string();
        slots[static_cast<std::size_t>(i)].example = std::move(ex);
      } catch (const std::exception& err) {
        slots[static_cast<std::size_t>(i)].error = err.what();
      }
    }
  });

  Dataset ds;
  ds.labels = labels;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].example) {
      local.per_class[static_cast<std::size_t>(jobs[i].label)]++;
      ds.examples.push_back(std::move(*slots[i].example));
    } else {
      local.skipped.push_back(jobs[i].path.string() + " (" + slots[i].error + ")");
    }
  }
  local.total = static_cast<std::int64_t>(ds.examples.size());
  if (summary) *summary = std::move(local);
  return ds;
}

}  // namespace cortex::data
