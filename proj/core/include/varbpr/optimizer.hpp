#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace varbpr::learning {

struct AdamConstants {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moments for one row-major parameter tensor.
struct MomentTable {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> first;
  std::vector<double> second;

  MomentTable(std::size_t rows, std::size_t dim) : rows(rows), dim(dim), first(rows * dim, 0.0), second(rows * dim, 0.0) {}
};

struct OptimizerState {
  AdamConstants constants;
  std::vector<MomentTable> tensors;
  std::uint64_t step = 0;
};

/// Rows of one tensor touched by the current step.
struct SparseUpdate {
  std::size_t tensor = 0;
  std::span<double> params;
  std::span<const double> grads;
  std::span<const std::size_t> rows;
};

/// One bias-corrected Adam step. Only the listed rows have their moments and
/// values updated; the step counter is shared by all tensors.
void adam_step(OptimizerState& state, std::span<const SparseUpdate> updates, double lr);

}  // namespace varbpr::learning
