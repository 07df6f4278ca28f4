#include <doctest.h>

#include <random>

#include "georft/geometry.hpp"
#include "oracles.hpp"

using namespace georft;

TEST_SUITE("geometry") {

TEST_CASE("box measures") {
  const BBox b{2, 3, 10, 7};
  CHECK(b.width() == 8);
  CHECK(b.height() == 4);
  CHECK(b.area() == 32);
  CHECK(b.center_x() == 6);
  CHECK(b.center_y() == 5);
  CHECK(b.is_valid());
  CHECK_FALSE(BBox{5, 0, 4, 1}.is_valid());
  CHECK_FALSE(BBox{-1, 0, 4, 1}.is_valid());
}

TEST_CASE("box IoU hand values") {
  CHECK(box_iou({0, 0, 10, 10}, {0, 0, 10, 10}) == 1.0);
  CHECK(box_iou({0, 0, 10, 10}, {10, 0, 20, 10}) == 0.0);
  // 5x10 overlap of two 10x10 boxes: 50 / 150.
  CHECK(box_iou({0, 0, 10, 10}, {5, 0, 15, 10}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(box_iou({0, 0, 0, 0}, {0, 0, 0, 0}) == 0.0);
}

TEST_CASE("RLE round trip and canonical form") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const int w = 1 + static_cast<int>(rng() % 13), h = 1 + static_cast<int>(rng() % 11);
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(w * h));
    for (auto& b : bits) b = rng() % 3 == 0;
    const auto runs = rle_encode(bits);
    CHECK(rle_decode(runs, bits.size()) == bits);
    const BinaryMask m = BinaryMask::from_bitmap(w, h, bits);
    CHECK(m.to_bitmap() == bits);
    CHECK(BinaryMask::from_json(m.to_json()) == m);
    std::size_t area = 0;
    for (auto b : bits) area += b;
    CHECK(m.area() == area);
  }
  // Runs start with background.
  CHECK(rle_encode(std::vector<std::uint8_t>{1, 1, 0}) == std::vector<std::uint32_t>{0, 2, 1});
  // Zero-length interior runs are merged away.
  const BinaryMask a(3, 1, {1, 0, 1, 1});
  CHECK(a == BinaryMask(3, 1, {2, 1}));
}

TEST_CASE("RLE validation") {
  CHECK_THROWS_AS(BinaryMask(2, 2, {1, 1}), GeometryError);
  CHECK_THROWS_AS(BinaryMask::from_json({{"size", {2, 2}}}), GeometryError);
  CHECK_THROWS_AS(BinaryMask::from_json({{"size", {2, 2}}, {"counts", {-1, 5}}}), GeometryError);
  CHECK_NOTHROW(BinaryMask::from_json({{"size", {2, 2}}, {"counts", {1, 3}}}));
}

TEST_CASE("mask IoU conventions") {
  const BinaryMask empty(4, 4);
  const auto full = BinaryMask::full(4, 4);
  CHECK(mask_iou(empty, empty) == 1.0);
  CHECK(mask_iou(empty, full) == 0.0);
  CHECK(mask_iou(full, full) == 1.0);
  CHECK_THROWS_AS(mask_iou(empty, BinaryMask(4, 5)), GeometryError);
}

TEST_CASE("mask set operations agree with bitmaps") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    std::vector<BinaryMask> ms;
    std::vector<std::vector<std::uint8_t>> bs;
    for (int k = 0; k < 3; ++k) {
      std::vector<std::uint8_t> bits(63);
      for (auto& b : bits) b = rng() % 2;
      bs.push_back(bits);
      ms.push_back(BinaryMask::from_bitmap(9, 7, bits));
    }
    std::vector<std::uint8_t> uni(63), inter(63);
    long i01 = 0, u01 = 0;
    for (int p = 0; p < 63; ++p) {
      uni[p] = bs[0][p] | bs[1][p] | bs[2][p];
      inter[p] = bs[0][p] & bs[1][p];
      i01 += bs[0][p] & bs[1][p];
      u01 += bs[0][p] | bs[1][p];
    }
    CHECK(mask_union(ms, 9, 7).to_bitmap() == uni);
    CHECK(mask_intersection(ms[0], ms[1]).to_bitmap() == inter);
    CHECK(mask_iou(ms[0], ms[1]) == (u01 ? double(i01) / double(u01) : 1.0));
  }
  CHECK(mask_union({}, 3, 3) == BinaryMask(3, 3));
}

TEST_CASE("rasterization follows pixel centers") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int t = 0; t < 300; ++t) {
    double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    const BBox box{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
    const auto m = rasterize_box(box, 16, 16);
    for (int r = 0; r < 16; ++r) {
      for (int col = 0; col < 16; ++col) {
        REQUIRE(m.at(r, col) == oracle::center_in_box(r, col, box));
      }
    }
  }
  // Half-pixel edges: [0.5, 1.5) covers only the center 0.5 -> pixel 0.
  CHECK(rasterize_box({0.5, 0.5, 1.5, 1.5}, 4, 4).area() == 1);
  CHECK(rasterize_box({0.6, 0.6, 1.5, 1.5}, 4, 4).area() == 0);
  CHECK(rasterize_box({0, 0, 100, 100}, 4, 4).area() == 16);
}

TEST_CASE("trim to box") {
  const auto full = BinaryMask::full(8, 8);
  CHECK(trim_mask_to_box(full, {2, 2, 4, 5}).area() == 6);
  CHECK(trim_mask_to_box(BinaryMask(8, 8), {2, 2, 4, 5}).area() == 0);
}

TEST_CASE("box JSON") {
  CHECK(box_from_json(box_to_json({1, 2, 3, 4})) == BBox{1, 2, 3, 4});
  CHECK_THROWS_AS(box_from_json({1, 2, 3}), GeometryError);
  CHECK_THROWS_AS(box_from_json({3, 2, 1, 4}), GeometryError);
  CHECK_THROWS_AS(box_from_json({1, "a", 3, 4}), GeometryError);
}

}
