#pragma once

#include <stdexcept>
#include <string>

namespace cortex {

// Base of all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible or malformed tensor/layer shapes.
struct ShapeError : Error {
  using Error::Error;
};

// Bad user-supplied values: labels out of range, empty datasets, bad config.
struct ValidationError : Error {
  using Error::Error;
};

// File and codec failures: unreadable paths, bad magic, checksum mismatch.
struct IoError : Error {
  using Error::Error;
};

// Broken internal invariants, e.g. a pooling argmax index out of range.
struct InternalError : Error {
  using Error::Error;
};

// Non-finite loss or gradient during training; carries the failing position.
struct TrainingDiverged : Error {
  TrainingDiverged(const std::string& what, int epoch, int batch)
      : Error(what), epoch(epoch), batch(batch) {}
  int epoch;
  int batch;
};

}  // namespace cortex
