#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cortex/error.hpp"
#include "cortex/io/binary.hpp"
#include "cortex/rng.hpp"

namespace cortex::train {

struct SplitIndices {
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> test;
};

// Seeded shuffle of 0..n-1, then the first floor(fraction*n) indices train
// and the remainder test. Same (n, fraction, seed) always yields the same
// membership and order, which is how `evaluate` reconstructs a training
// run's held-out subset without any persisted state.
inline SplitIndices split_dataset(std::int64_t n, double fraction, std::uint64_t seed) {
  if (n <= 0) throw ValidationError("split: dataset is empty");
  if (!(fraction > 0.0) || !(fraction < 1.0))
    throw ValidationError("split: fraction must be in (0,1)");
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng = Rng::derive(seed, 0x73706c6974ULL);
  rng.shuffle(order);
  const auto cut = static_cast<std::size_t>(fraction * static_cast<double>(n));
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  return s;
}

// Per-class variant: shuffles within each class and takes floor(fraction*n_c)
// of each for training. Off by default everywhere; labels[i] in 0..3.
inline SplitIndices split_dataset_stratified(std::span<const int> labels, double fraction,
                                             std::uint64_t seed) {
  if (labels.empty()) throw ValidationError("split: dataset is empty");
  if (!(fraction > 0.0) || !(fraction < 1.0))
    throw ValidationError("split: fraction must be in (0,1)");
  SplitIndices s;
  for (int c = 0; c < 4; ++c) {
    std::vector<std::int64_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) members.push_back(static_cast<std::int64_t>(i));
    Rng rng = Rng::derive(seed, 0x737472617400ULL + static_cast<std::uint64_t>(c));
    rng.shuffle(members);
    const auto cut = static_cast<std::size_t>(fraction * static_cast<double>(members.size()));
    s.train.insert(s.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(cut));
    s.test.insert(s.test.end(), members.begin() + static_cast<std::ptrdiff_t>(cut), members.end());
  }
  return s;
}

// Order-sensitive digest of a subset; train and evaluate print it so runs
// can be checked to have reconstructed the same membership.
inline std::uint64_t membership_hash(std::span<const std::int64_t> indices) {
  io::Fnv1a h;
  for (std::int64_t idx : indices) {
    std::uint8_t bytes[8];
    for (int b = 0; b < 8; ++b)
      bytes[b] = static_cast<std::uint8_t>((static_cast<std::uint64_t>(idx) >> (8 * b)) & 0xff);
    h.update(bytes, 8);
  }
  return h.digest();
}

}  // namespace cortex::train
