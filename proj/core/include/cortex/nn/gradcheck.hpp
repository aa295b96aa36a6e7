#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cortex::nn::gradcheck {

inline constexpr double kEpsilon = 1e-5;    // central-difference step
inline constexpr double kTolerance = 1e-4;  // max relative error accepted

struct CheckResult {
  std::string name;
  double max_rel_err = 0.0;
  std::int64_t worst_coordinate = -1;  // flat position in the perturbed vector
  bool pass = false;
};

enum class LayerFilter { all, conv, pool, dense, activations };

LayerFilter parse_filter(const std::string& name);  // throws ValidationError

// Finite-difference verification of every analytic backward contract, in
// double precision: each layer kind in isolation plus a small composed model
// (conv/pool/conv/flatten/dense/dense on an 8x8 input) differentiated through
// both loss kinds. Deterministic per seed.
//
// inject_fault deliberately corrupts one analytic gradient before comparison,
// for harness-sensitivity checks; the run must then report a failure.
std::vector<CheckResult> run_suite(std::uint64_t seed, LayerFilter filter = LayerFilter::all,
                                   bool inject_fault = false);

}  // namespace cortex::nn::gradcheck
