#include "georft/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace georft {

namespace {

void check_canvas(int width, int height) {
  if (width < 0 || height < 0) {
    throw GeometryError("mask dimensions must be non-negative");
  }
}

void check_same_size(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw GeometryError("mask dimension mismatch: " + std::to_string(a.width()) +
                        "x" + std::to_string(a.height()) + " vs " +
                        std::to_string(b.width()) + "x" +
                        std::to_string(b.height()));
  }
}

// Walks two run sequences in lockstep, calling fn(len, fg_a, fg_b) for each
// maximal segment where both masks are constant.
template <typename Fn>
void merge_runs(const std::vector<std::uint32_t>& a,
                const std::vector<std::uint32_t>& b, Fn&& fn) {
  std::size_t ia = 0, ib = 0;
  std::uint64_t left_a = a.empty() ? 0 : a[0];
  std::uint64_t left_b = b.empty() ? 0 : b[0];
  while (ia < a.size() && ib < b.size()) {
    if (left_a == 0) {
      if (++ia < a.size()) left_a = a[ia];
      continue;
    }
    if (left_b == 0) {
      if (++ib < b.size()) left_b = b[ib];
      continue;
    }
    const std::uint64_t step = std::min(left_a, left_b);
    fn(step, (ia % 2) == 1, (ib % 2) == 1);
    left_a -= step;
    left_b -= step;
  }
}

// Pixel index range [lo, hi) whose centers fall in [a, b), clipped to [0, n).
std::pair<int, int> covered_pixels(double a, double b, int n) {
  // center c = k + 0.5 satisfies a <= c < b  <=>  k >= a - 0.5, k < b - 0.5
  double lo = std::ceil(a - 0.5);
  double hi = std::ceil(b - 0.5);
  lo = std::clamp(lo, 0.0, static_cast<double>(n));
  hi = std::clamp(hi, 0.0, static_cast<double>(n));
  if (hi < lo) hi = lo;
  return {static_cast<int>(lo), static_cast<int>(hi)};
}

}  // namespace

bool BBox::is_valid() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
         std::isfinite(y2) && x1 >= 0 && y1 >= 0 && x1 <= x2 && y1 <= y2;
}

bool Keypoint::is_valid() const {
  return std::isfinite(x) && std::isfinite(y) && x >= 0 && y >= 0;
}

std::vector<std::uint32_t> rle_encode(std::span<const std::uint8_t> bitmap) {
  std::vector<std::uint32_t> runs;
  bool current = false;
  std::uint32_t run = 0;
  for (std::uint8_t px : bitmap) {
    const bool fg = px != 0;
    if (fg != current) {
      runs.push_back(run);
      run = 0;
      current = fg;
    }
    ++run;
  }
  runs.push_back(run);
  return runs;
}

std::vector<std::uint8_t> rle_decode(std::span<const std::uint32_t> runs,
                                     std::size_t pixel_count) {
  std::vector<std::uint8_t> bitmap;
  bitmap.reserve(pixel_count);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    bitmap.insert(bitmap.end(), runs[i], static_cast<std::uint8_t>(i % 2));
  }
  if (bitmap.size() != pixel_count) {
    throw GeometryError("run lengths sum to " + std::to_string(bitmap.size()) +
                        ", expected " + std::to_string(pixel_count));
  }
  return bitmap;
}

BinaryMask::BinaryMask(int width, int height)
    : width_(width), height_(height) {
  check_canvas(width, height);
  runs_ = {static_cast<std::uint32_t>(static_cast<std::uint64_t>(width) *
                                      static_cast<std::uint64_t>(height))};
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint32_t> runs)
    : width_(width), height_(height), runs_(std::move(runs)) {
  check_canvas(width, height);
  const std::uint64_t total =
      std::accumulate(runs_.begin(), runs_.end(), std::uint64_t{0});
  if (total != static_cast<std::uint64_t>(width) * height) {
    throw GeometryError("run lengths sum to " + std::to_string(total) +
                        ", expected " +
                        std::to_string(static_cast<std::uint64_t>(width) *
                                       height));
  }
  if (runs_.empty()) runs_.push_back(0);
  // Canonicalize: merge zero-length interior runs so equal bitmaps compare
  // equal regardless of how the counts were produced.
  runs_ = rle_encode(rle_decode(runs_, total));
}

BinaryMask BinaryMask::from_bitmap(int width, int height,
                                   std::span<const std::uint8_t> bitmap) {
  check_canvas(width, height);
  if (bitmap.size() != static_cast<std::size_t>(width) * height) {
    throw GeometryError("bitmap size does not match canvas");
  }
  BinaryMask m;
  m.width_ = width;
  m.height_ = height;
  m.runs_ = rle_encode(bitmap);
  return m;
}

BinaryMask BinaryMask::full(int width, int height) {
  check_canvas(width, height);
  BinaryMask m;
  m.width_ = width;
  m.height_ = height;
  m.runs_ = {0, static_cast<std::uint32_t>(width * height)};
  if (width * height == 0) m.runs_ = {0};
  return m;
}

std::vector<std::uint8_t> BinaryMask::to_bitmap() const {
  return rle_decode(runs_, static_cast<std::size_t>(width_) * height_);
}

std::uint64_t BinaryMask::area() const {
  std::uint64_t total = 0;
  for (std::size_t i = 1; i < runs_.size(); i += 2) total += runs_[i];
  return total;
}

bool BinaryMask::at(int row, int col) const {
  if (row < 0 || col < 0 || row >= height_ || col >= width_) return false;
  std::uint64_t index = static_cast<std::uint64_t>(row) * width_ + col;
  for (std::size_t i = 0; i < runs_.size(); ++i) {
    if (index < runs_[i]) return i % 2 == 1;
    index -= runs_[i];
  }
  return false;
}

nlohmann::json BinaryMask::to_json() const {
  return {{"size", {height_, width_}}, {"counts", runs_}};
}

BinaryMask BinaryMask::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("size") || !j.contains("counts")) {
    throw GeometryError("RLE mask needs \"size\" and \"counts\"");
  }
  const auto& size = j.at("size");
  if (!size.is_array() || size.size() != 2 || !size[0].is_number_integer() ||
      !size[1].is_number_integer()) {
    throw GeometryError("RLE \"size\" must be [height, width]");
  }
  std::vector<std::uint32_t> counts;
  for (const auto& c : j.at("counts")) {
    if (!c.is_number_integer() || c.get<std::int64_t>() < 0) {
      throw GeometryError("RLE counts must be non-negative integers");
    }
    counts.push_back(c.get<std::uint32_t>());
  }
  return BinaryMask(size[1].get<int>(), size[0].get<int>(), std::move(counts));
}

double box_iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = (iw > 0 && ih > 0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return inter / uni;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  check_same_size(a, b);
  std::uint64_t inter = 0, uni = 0;
  merge_runs(a.runs(), b.runs(), [&](std::uint64_t len, bool fa, bool fb) {
    if (fa && fb) inter += len;
    if (fa || fb) uni += len;
  });
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask mask_union(std::span<const BinaryMask> masks, int width,
                      int height) {
  BinaryMask result(width, height);
  if (masks.empty()) return result;
  std::vector<std::uint8_t> acc(static_cast<std::size_t>(width) * height, 0);
  for (const auto& m : masks) {
    check_same_size(result, m);
    std::size_t pos = 0;
    const auto& runs = m.runs();
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (i % 2 == 1) {
        std::fill_n(acc.begin() + static_cast<std::ptrdiff_t>(pos), runs[i],
                    std::uint8_t{1});
      }
      pos += runs[i];
    }
  }
  return BinaryMask::from_bitmap(width, height, acc);
}

BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b) {
  check_same_size(a, b);
  std::vector<std::uint32_t> runs;
  bool current = false;
  std::uint64_t run = 0;
  merge_runs(a.runs(), b.runs(), [&](std::uint64_t len, bool fa, bool fb) {
    const bool fg = fa && fb;
    if (fg != current) {
      runs.push_back(static_cast<std::uint32_t>(run));
      run = 0;
      current = fg;
    }
    run += len;
  });
  runs.push_back(static_cast<std::uint32_t>(run));
  return BinaryMask(a.width(), a.height(), std::move(runs));
}

BinaryMask rasterize_box(const BBox& b, int width, int height) {
  check_canvas(width, height);
  const auto [c0, c1] = covered_pixels(b.x1, b.x2, width);
  const auto [r0, r1] = covered_pixels(b.y1, b.y2, height);
  if (c0 >= c1 || r0 >= r1) return BinaryMask(width, height);
  std::vector<std::uint32_t> runs;
  const auto row_len = static_cast<std::uint32_t>(c1 - c0);
  const auto gap = static_cast<std::uint32_t>(width - row_len);
  runs.push_back(static_cast<std::uint32_t>(r0 * width + c0));
  for (int r = r0; r < r1; ++r) {
    runs.push_back(row_len);
    if (r + 1 < r1) runs.push_back(gap);
  }
  runs.push_back(static_cast<std::uint32_t>((height - r1) * width +
                                            (width - c1)));
  return BinaryMask(width, height, std::move(runs));
}

BinaryMask trim_mask_to_box(const BinaryMask& m, const BBox& b) {
  return mask_intersection(m, rasterize_box(b, m.width(), m.height()));
}

nlohmann::json box_to_json(const BBox& b) {
  return nlohmann::json::array({b.x1, b.y1, b.x2, b.y2});
}

BBox box_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw GeometryError("box must be an array of four numbers");
  }
  for (const auto& v : j) {
    if (!v.is_number()) throw GeometryError("box coordinates must be numbers");
  }
  BBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
         j[3].get<double>()};
  if (!b.is_valid()) throw GeometryError("box violates x1<=x2, y1<=y2, >=0");
  return b;
}

}  // namespace georft
