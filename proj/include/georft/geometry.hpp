#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace georft {

/// Axis-aligned box in continuous pixel coordinates, closed-open on both axes.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }

  bool is_valid() const;

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Keypoint {
  double x = 0.0;
  double y = 0.0;

  bool is_valid() const;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Binary mask stored as row-major run lengths, alternating background and
/// foreground and always starting with a (possibly empty) background run.
class BinaryMask {
 public:
  BinaryMask() = default;
  /// All-background mask.
  BinaryMask(int width, int height);
  /// Throws GeometryError when the runs do not cover width*height pixels.
  BinaryMask(int width, int height, std::vector<std::uint32_t> runs);

  static BinaryMask from_bitmap(int width, int height,
                                std::span<const std::uint8_t> bitmap);
  static BinaryMask full(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<std::uint32_t>& runs() const { return runs_; }

  std::vector<std::uint8_t> to_bitmap() const;
  std::uint64_t area() const;
  bool empty() const { return area() == 0; }
  bool at(int row, int col) const;

  nlohmann::json to_json() const;
  static BinaryMask from_json(const nlohmann::json& j);

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint32_t> runs_;
};

/// Run-length encode a row-major bitmap (nonzero = foreground).
std::vector<std::uint32_t> rle_encode(std::span<const std::uint8_t> bitmap);
std::vector<std::uint8_t> rle_decode(std::span<const std::uint32_t> runs,
                                     std::size_t pixel_count);

double box_iou(const BBox& a, const BBox& b);

/// Empty-vs-empty is 1, empty-vs-nonempty is 0. Throws on size mismatch.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

/// Pixel-wise OR. An empty list yields the all-background mask of the
/// given canvas.
BinaryMask mask_union(std::span<const BinaryMask> masks, int width,
                      int height);

BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b);

/// Pixel (row i, col j) is set iff its center (j+0.5, i+0.5) lies in
/// [x1,x2) x [y1,y2).
BinaryMask rasterize_box(const BBox& b, int width, int height);

BinaryMask trim_mask_to_box(const BinaryMask& m, const BBox& b);

/// Canonical [x1, y1, x2, y2] array.
nlohmann::json box_to_json(const BBox& b);
BBox box_from_json(const nlohmann::json& j);

}  // namespace georft
