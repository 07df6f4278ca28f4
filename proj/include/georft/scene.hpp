#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "georft/geometry.hpp"

namespace georft {

enum class Shape { kRect, kEllipse };

struct SceneObject {
  Shape shape = Shape::kRect;
  BBox bbox;
  std::string category;
  // Position among same-category instances, ordered by center x.
  int distractor_rank = 0;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

/// Synthetic image: a canvas with rectangles and ellipses on it.
struct Scene {
  int width = 0;
  int height = 0;
  std::vector<SceneObject> objects;

  std::size_t count(std::string_view category) const;

  nlohmann::json to_json() const;
  static Scene from_json(const nlohmann::json& j);

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Exact pixel footprint of an object (pixel-center test for both shapes).
BinaryMask object_mask(const SceneObject& object, int width, int height);

/// Interior point used as the primary keypoint for an object.
Keypoint object_centroid(const SceneObject& object);
/// Second interior point, offset from the centroid toward the top-left.
Keypoint object_secondary_point(const SceneObject& object);

std::string_view shape_name(Shape shape);

}  // namespace georft
