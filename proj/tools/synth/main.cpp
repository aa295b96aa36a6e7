// Renders the synthetic pattern classes as a PNG directory tree that the
// `cortex prepare` subcommand can ingest. Handy for end-to-end smoke runs
// without any real imaging data.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cortex/data/image.hpp"
#include "cortex/data/synthetic.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"synthetic pattern image generator"};
  std::string out_dir;
  int per_class = 50;
  int size = 200;
  std::uint64_t seed = 1;
  double sigma = 0.05;
  app.add_option("--out", out_dir, "output root directory")->required();
  app.add_option("--per-class", per_class, "images per class")->check(CLI::PositiveNumber);
  app.add_option("--size", size, "square image size in pixels")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "noise seed");
  app.add_option("--sigma", sigma, "gaussian noise level")->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);

  try {
    cortex::data::Dataset ds =
        cortex::data::make_synthetic_dataset(per_class, size, size, seed, sigma);
    for (const auto& name : ds.labels.names) fs::create_directories(fs::path(out_dir) / name);
    std::array<int, cortex::data::kNumClasses> counter{};
    for (const auto& ex : ds.examples) {
      const auto png = cortex::data::encode_png(cortex::data::denormalize(ex.image));
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%04d.png",
                    ds.labels.name_of(ex.label).c_str(), counter[static_cast<std::size_t>(ex.label)]++);
      const fs::path path = fs::path(out_dir) / ds.labels.name_of(ex.label) / name;
      std::ofstream out(path, std::ios::binary);
      out.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
      if (!out) {
        std::fprintf(stderr, "error: cannot write %s\n", path.string().c_str());
        return 2;
      }
    }
    std::printf("root: %s\n", out_dir.c_str());
    std::printf("per_class: %d\n", per_class);
    std::printf("size: %d\n", size);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
