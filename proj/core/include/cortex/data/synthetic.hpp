#pragma once

#include <cstdint>

#include "cortex/data/dataset.hpp"

namespace cortex::data {

// Deterministic per-class test patterns: 0 filled disk, 1 ring, 2 cross,
// 3 diagonal gradient. Intensity in [0,1] before noise.
float synthetic_pattern(int class_id, int y, int x, int height, int width);

// per_class examples of each class at the given size, with seeded gaussian
// pixel noise (sigma, clamped back into [0,1]). Same seed, same bytes.
Dataset make_synthetic_dataset(int per_class, int height = 200, int width = 200,
                               std::uint64_t seed = 1, double sigma = 0.05);

}  // namespace cortex::data
