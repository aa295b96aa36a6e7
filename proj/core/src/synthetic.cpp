#include "cortex/data/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "cortex/error.hpp"
#include "cortex/parallel.hpp"
#include "cortex/rng.hpp"

namespace cortex::data {

float synthetic_pattern(int class_id, int y, int x, int height, int width) {
  // Centered unit coordinates in (-0.5, 0.5).
  const double u = (static_cast<double>(x) + 0.5) / width - 0.5;
  const double v = (static_cast<double>(y) + 0.5) / height - 0.5;
  const double r = std::sqrt(u * u + v * v);
  constexpr double fg = 0.85, bg = 0.10;
  switch (class_id) {
    case 0:  // filled disk
      return static_cast<float>(r < 0.30 ? fg : bg);
    case 1:  // ring
      return static_cast<float>(r >= 0.20 && r <= 0.34 ? fg : bg);
    case 2:  // cross
      return static_cast<float>(std::abs(u) < 0.08 || std::abs(v) < 0.08 ? fg : bg);
    case 3: {  // diagonal gradient
      const double t = std::clamp((u + v + 1.0) / 2.0, 0.0, 1.0);
      return static_cast<float>(0.05 + 0.85 * t);
    }
    default:
      throw ValidationError("synthetic pattern class must be 0..3");
  }
}

Dataset make_synthetic_dataset(int per_class, int height, int width, std::uint64_t seed,
                               double sigma) {
  if (per_class < 1) throw ValidationError("synthetic dataset needs per_class >= 1");
  if (height < 1 || width < 1) throw ValidationError("synthetic dataset needs positive size");

  Dataset ds;
  ds.labels = LabelMap::standard();
  ds.examples.resize(static_cast<std::size_t>(per_class) * kNumClasses);

  const std::int64_t plane = static_cast<std::int64_t>(height) * width;
  parallel_for(static_cast<std::int64_t>(ds.examples.size()), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      const int cls = static_cast<int>(i / per_class);
      const int ordinal = static_cast<int>(i % per_class);
      Rng rng = Rng::derive(seed, 0x73796e7468ULL + static_cast<std::uint64_t>(i));
      Example ex;
      ex.label = cls;
      ex.source_id = "synthetic/" + ds.labels.name_of(cls) + "/" + std::to_string(ordinal);
      ex.image = TensorF(Shape{3, height, width});
      float* p = ex.image.data().data();
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          const float base = synthetic_pattern(cls, y, x, height, width);
          for (int c = 0; c < 3; ++c) {
            const double noisy = base + sigma * rng.normal();
            p[c * plane + y * width + x] =
                static_cast<float>(std::clamp(noisy, 0.0, 1.0));
          }
        }
      }
      ds.examples[static_cast<std::size_t>(i)] = std::move(ex);
    }
  });
  return ds;
}

}  // namespace cortex::data
