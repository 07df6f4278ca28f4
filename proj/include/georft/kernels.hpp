#pragma once

// Data-parallel batch kernels. Every kernel has a serial path that is the
// reference for tests and an OpenMP path; both produce bit-identical
// results because each output slot is written by exactly one iteration and
// any reduction happens afterwards in index order.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "georft/geometry.hpp"

namespace georft {

enum class Execution { kSerial, kParallel };

/// Runs fn(i) for i in [0, n). Iterations must only write to slot i.
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn,
                    Execution exec);

int max_threads();

namespace kernels {

/// Row-major |a| x |b| IoU matrix.
std::vector<double> pairwise_box_iou(std::span<const BBox> a,
                                     std::span<const BBox> b, Execution exec);

/// Element-wise IoU of equally sized mask lists.
std::vector<double> batch_mask_iou(std::span<const BinaryMask> a,
                                   std::span<const BinaryMask> b,
                                   Execution exec);

/// scores[c] = dot(features[c*dim : (c+1)*dim], params) / temperature.
std::vector<double> linear_scores(std::span<const double> features,
                                  std::span<const double> params,
                                  double temperature, Execution exec);

/// Sum of per-slot vectors in index order (deterministic reduction).
void ordered_sum(std::span<const std::vector<double>> parts,
                 std::span<double> out);

}  // namespace kernels
}  // namespace georft
