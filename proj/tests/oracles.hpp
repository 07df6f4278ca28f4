#pragma once

// Reference implementations used only by tests. They are written from the
// definitions, with plain loops and no calls into the library's numerics.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "georft/geometry.hpp"
#include "georft/scene.hpp"
#include "georft/structured_output.hpp"

namespace oracle {

// (r - mean) / (population std + eps), two-pass in long double.
inline std::vector<double> advantages(const std::vector<double>& r, double eps) {
  long double mean = 0;
  for (double v : r) mean += v;
  mean /= r.size();
  long double var = 0;
  for (double v : r) var += (v - mean) * (v - mean);
  var /= r.size();
  const long double sd = std::sqrt(var);
  std::vector<double> out;
  for (double v : r) out.push_back(static_cast<double>((v - mean) / (sd + eps)));
  return out;
}

inline bool center_in_box(int row, int col, const georft::BBox& b) {
  const double cx = col + 0.5, cy = row + 0.5;
  return b.x1 <= cx && cx < b.x2 && b.y1 <= cy && cy < b.y2;
}

inline bool in_object(const georft::SceneObject& o, int row, int col) {
  if (o.shape == georft::Shape::kRect) return center_in_box(row, col, o.bbox);
  // Integer-exact ellipse test on doubled coordinates.
  const double w = o.bbox.x2 - o.bbox.x1, h = o.bbox.y2 - o.bbox.y1;
  if (w <= 0 || h <= 0) return false;
  const double px = 2.0 * col + 1.0 - (o.bbox.x1 + o.bbox.x2);
  const double py = 2.0 * row + 1.0 - (o.bbox.y1 + o.bbox.y2);
  return px * px * h * h + py * py * w * w <= w * w * h * h;
}

// Area-based box IoU.
inline double area_iou(const georft::BBox& a, const georft::BBox& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double uni = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

// IoU of the pixel sets covered by two boxes.
inline double raster_iou(const georft::BBox& a, const georft::BBox& b, int w, int h) {
  long inter = 0, uni = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const bool x = center_in_box(r, c, a), y = center_in_box(r, c, b);
      inter += x && y;
      uni += x || y;
    }
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline std::vector<char> bitmap(const georft::BinaryMask& m) {
  std::vector<char> out;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) out.push_back(m.at(r, c));
  }
  return out;
}

// Single-image COCO AP from the PR curve of every prediction prefix:
// interpolated precision at recall i/100 is the best precision among
// prefixes reaching that recall.
inline double single_image_map(const std::vector<georft::LabeledBox>& pred,
                               const std::vector<georft::LabeledBox>& gt) {
  std::set<std::string> cats;
  for (const auto& g : gt) cats.insert(g.label);
  if (cats.empty()) return pred.empty() ? 1.0 : 0.0;
  double total = 0.0;
  for (const auto& cat : cats) {
    std::vector<georft::BBox> p, g;
    for (const auto& x : pred) if (x.label == cat) p.push_back(x.box);
    for (const auto& x : gt) if (x.label == cat) g.push_back(x.box);
    double cat_sum = 0.0;
    for (int j = 0; j < 10; ++j) {
      const double t = (50.0 + 5.0 * j) / 100.0;
      std::vector<bool> used(g.size(), false);
      std::vector<int> tp_prefix;
      int tp = 0;
      for (const auto& d : p) {
        int best = -1;
        double best_iou = -1;
        for (std::size_t k = 0; k < g.size(); ++k) {
          if (used[k]) continue;
          const double v = area_iou(d, g[k]);
          if (v >= t && v > best_iou) {
            best_iou = v;
            best = static_cast<int>(k);
          }
        }
        if (best >= 0) {
          used[best] = true;
          ++tp;
        }
        tp_prefix.push_back(tp);
      }
      double ap = 0.0;
      for (int i = 0; i <= 100; ++i) {
        double best_p = 0.0;
        for (std::size_t k = 0; k < tp_prefix.size(); ++k) {
          if (100L * tp_prefix[k] >= static_cast<long>(i) * static_cast<long>(g.size())) {
            best_p = std::max(best_p, static_cast<double>(tp_prefix[k]) /
                                          static_cast<double>(k + 1));
          }
        }
        ap += best_p;
      }
      cat_sum += ap / 101;
    }
    total += cat_sum / 10;
  }
  return total / static_cast<double>(cats.size());
}

// Prompted-segmentation reward by brute force over pixels.
inline double gres_iou(const georft::Scene& scene,
                       const std::vector<georft::GresItem>& items,
                       const std::vector<std::size_t>& targets) {
  long inter = 0, uni = 0;
  for (int r = 0; r < scene.height; ++r) {
    for (int c = 0; c < scene.width; ++c) {
      bool pred = false;
      for (const auto& it : items) {
        if (!center_in_box(r, c, it.box)) continue;
        const int kr = static_cast<int>(std::floor(it.keypoint1.y));
        const int kc = static_cast<int>(std::floor(it.keypoint1.x));
        int chosen = -1;
        double best = -1.0;
        for (std::size_t o = 0; o < scene.objects.size(); ++o) {
          if (kr >= scene.height || kc >= scene.width) continue;
          if (!in_object(scene.objects[o], kr, kc)) continue;
          const double v = area_iou(scene.objects[o].bbox, it.box);
          if (v > best) {
            best = v;
            chosen = static_cast<int>(o);
          }
        }
        if (chosen < 0 || in_object(scene.objects[chosen], r, c)) {
          pred = true;
          break;
        }
      }
      bool truth = false;
      for (auto t : targets) truth = truth || in_object(scene.objects[t], r, c);
      inter += pred && truth;
      uni += pred || truth;
    }
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace oracle
