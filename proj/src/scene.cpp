#include "georft/scene.hpp"

#include <algorithm>
#include <cmath>

namespace georft {

std::size_t Scene::count(std::string_view category) const {
  return static_cast<std::size_t>(
      std::count_if(objects.begin(), objects.end(),
                    [&](const SceneObject& o) { return o.category == category; }));
}

std::string_view shape_name(Shape shape) {
  return shape == Shape::kRect ? "rect" : "ellipse";
}

nlohmann::json Scene::to_json() const {
  nlohmann::json objs = nlohmann::json::array();
  for (const auto& o : objects) {
    objs.push_back({{"shape", shape_name(o.shape)},
                    {"bbox", box_to_json(o.bbox)},
                    {"category", o.category},
                    {"distractor_rank", o.distractor_rank}});
  }
  return {{"width", width}, {"height", height}, {"objects", objs}};
}

Scene Scene::from_json(const nlohmann::json& j) {
  Scene s;
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  if (s.width <= 0 || s.height <= 0) {
    throw GeometryError("scene canvas must be positive");
  }
  for (const auto& o : j.at("objects")) {
    SceneObject obj;
    const auto shape = o.at("shape").get<std::string>();
    if (shape == "rect") {
      obj.shape = Shape::kRect;
    } else if (shape == "ellipse") {
      obj.shape = Shape::kEllipse;
    } else {
      throw GeometryError("unknown shape \"" + shape + "\"");
    }
    obj.bbox = box_from_json(o.at("bbox"));
    if (obj.bbox.x2 > s.width || obj.bbox.y2 > s.height) {
      throw GeometryError("object box leaves the canvas");
    }
    obj.category = o.at("category").get<std::string>();
    obj.distractor_rank = o.value("distractor_rank", 0);
    s.objects.push_back(std::move(obj));
  }
  return s;
}

BinaryMask object_mask(const SceneObject& object, int width, int height) {
  if (object.shape == Shape::kRect) {
    return rasterize_box(object.bbox, width, height);
  }
  // Pixel centers inside the inscribed ellipse, tested as
  // (2dx)^2 h^2 + (2dy)^2 w^2 <= w^2 h^2, which is exact for integer boxes.
  const double w = object.bbox.width();
  const double h = object.bbox.height();
  std::vector<std::uint8_t> bitmap(static_cast<std::size_t>(width) * height, 0);
  if (w <= 0 || h <= 0) return BinaryMask(width, height);
  const double sx = object.bbox.x1 + object.bbox.x2;
  const double sy = object.bbox.y1 + object.bbox.y2;
  const double rhs = w * w * h * h;
  const int r0 = std::max(0, static_cast<int>(std::floor(object.bbox.y1)));
  const int r1 = std::min(height, static_cast<int>(std::ceil(object.bbox.y2)));
  const int c0 = std::max(0, static_cast<int>(std::floor(object.bbox.x1)));
  const int c1 = std::min(width, static_cast<int>(std::ceil(object.bbox.x2)));
  for (int r = r0; r < r1; ++r) {
    const double py = 2.0 * r + 1.0 - sy;
    for (int c = c0; c < c1; ++c) {
      const double px = 2.0 * c + 1.0 - sx;
      if (px * px * h * h + py * py * w * w <= rhs) {
        bitmap[static_cast<std::size_t>(r) * width + c] = 1;
      }
    }
  }
  return BinaryMask::from_bitmap(width, height, bitmap);
}

Keypoint object_centroid(const SceneObject& object) {
  return {object.bbox.center_x(), object.bbox.center_y()};
}

Keypoint object_secondary_point(const SceneObject& object) {
  return {object.bbox.center_x() - 0.125 * object.bbox.width(),
          object.bbox.center_y() - 0.125 * object.bbox.height()};
}

}  // namespace georft
