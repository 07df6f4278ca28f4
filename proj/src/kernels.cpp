#include "georft/kernels.hpp"

#include <algorithm>
#include <exception>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace georft {

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn,
                    Execution exec) {
  if (exec == Execution::kSerial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  // Exceptions must not escape an OpenMP region; rethrow the lowest-index
  // one afterwards so the serial and parallel paths fail identically.
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace kernels {

std::vector<double> pairwise_box_iou(std::span<const BBox> a,
                                     std::span<const BBox> b, Execution exec) {
  std::vector<double> out(a.size() * b.size());
  const auto rows = static_cast<std::ptrdiff_t>(a.size());
  const std::size_t cols = b.size();
  if (exec == Execution::kSerial) {
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        out[static_cast<std::size_t>(i) * cols + j] = box_iou(a[i], b[j]);
      }
    }
    return out;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out[static_cast<std::size_t>(i) * cols + j] = box_iou(a[i], b[j]);
    }
  }
  return out;
}

std::vector<double> batch_mask_iou(std::span<const BinaryMask> a,
                                   std::span<const BinaryMask> b,
                                   Execution exec) {
  if (a.size() != b.size()) {
    throw GeometryError("batch_mask_iou: list sizes differ");
  }
  std::vector<double> out(a.size());
  for_each_index(
      a.size(), [&](std::size_t i) { out[i] = mask_iou(a[i], b[i]); }, exec);
  return out;
}

std::vector<double> linear_scores(std::span<const double> features,
                                  std::span<const double> params,
                                  double temperature, Execution exec) {
  const std::size_t dim = params.size();
  if (dim == 0 || features.size() % dim != 0) {
    throw std::invalid_argument("linear_scores: feature size is not a multiple of dim");
  }
  const std::size_t n = features.size() / dim;
  std::vector<double> out(n, 0.0);
  const auto count = static_cast<std::ptrdiff_t>(n);
  auto row = [&](std::ptrdiff_t c) {
    double s = 0.0;
    const double* f = features.data() + static_cast<std::size_t>(c) * dim;
    for (std::size_t k = 0; k < dim; ++k) s += f[k] * params[k];
    out[static_cast<std::size_t>(c)] = s / temperature;
  };
  if (exec == Execution::kSerial) {
    for (std::ptrdiff_t c = 0; c < count; ++c) row(c);
    return out;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < count; ++c) row(c);
  return out;
}

void ordered_sum(std::span<const std::vector<double>> parts,
                 std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& part : parts) {
    for (std::size_t k = 0; k < out.size() && k < part.size(); ++k) {
      out[k] += part[k];
    }
  }
}

}  // namespace kernels
}  // namespace georft
