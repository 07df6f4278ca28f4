#include "georft/rewards.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "georft/evalkit.hpp"

namespace georft {

namespace {

RewardBreakdown finish(int format, double metrics,
                       const RewardWeights& weights) {
  RewardBreakdown r;
  r.format = format;
  r.metrics = metrics;
  r.weight_format = weights.format;
  r.weight_metrics = weights.metrics;
  r.total = combine(format, metrics, weights);
  return r;
}

std::optional<ParsedAnswer> parse_completion(std::string_view completion,
                                             Task task) {
  const auto response = extract_tagged(completion);
  if (!response.well_formed) return std::nullopt;
  auto parsed = parse_answer(task, response.answer);
  if (!parsed) return std::nullopt;
  return parsed.value();
}

}  // namespace

std::size_t GroundTruth::object_count() const {
  switch (task) {
    case Task::kRec:
      return rec_box ? 1 : 0;
    case Task::kOvd:
      return ovd_items.size();
    case Task::kGres:
      return gres_masks.size();
  }
  return 0;
}

BinaryMask ToySegmenter::segment(const Scene& scene, const BBox& box,
                                 const Keypoint& keypoint1,
                                 const Keypoint& /*keypoint2*/) const {
  const int row = static_cast<int>(std::floor(keypoint1.y));
  const int col = static_cast<int>(std::floor(keypoint1.x));
  std::optional<BinaryMask> best;
  double best_iou = -1.0;
  for (const auto& obj : scene.objects) {
    auto mask = object_mask(obj, scene.width, scene.height);
    if (!mask.at(row, col)) continue;
    const double iou = box_iou(obj.bbox, box);
    if (iou > best_iou) {
      best_iou = iou;
      best = std::move(mask);
    }
  }
  if (!best) return rasterize_box(box, scene.width, scene.height);
  return trim_mask_to_box(*best, box);
}

double combine(int format, double metrics, const RewardWeights& weights) {
  if (!(weights.format >= 0.0) || !(weights.metrics >= 0.0) ||
      !std::isfinite(weights.format) || !std::isfinite(weights.metrics)) {
    throw std::invalid_argument("reward weights must be finite and >= 0");
  }
  return weights.format * format + weights.metrics * metrics;
}

std::string normalize_label(std::string_view label) {
  std::string out;
  bool pending_space = false;
  for (char c : label) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

double overlength_penalty(std::size_t n_gt, std::size_t n_pred) {
  if (n_pred == 0) return 1.0;
  return std::min(1.0, std::sqrt(static_cast<double>(n_gt) /
                                 static_cast<double>(n_pred)));
}

double ovd_metric(const ParsedAnswer& answer, const GroundTruth& gt) {
  const std::size_t n = answer.ovd_items.size();
  const std::size_t n_gt = gt.ovd_items.size();
  if (n_gt == 0) return n == 0 ? 1.0 : 0.0;
  if (n == 0) return 0.0;
  return overlength_penalty(n_gt, n) *
         single_image_map(answer.ovd_items, gt.ovd_items);
}

double gres_metric(const ParsedAnswer& answer, const GroundTruth& gt,
                   const Segmenter& segmenter, const Scene& scene) {
  if (scene.width != gt.width || scene.height != gt.height) {
    throw GeometryError("scene canvas does not match ground-truth canvas");
  }
  std::vector<BinaryMask> predicted;
  predicted.reserve(answer.gres_items.size());
  for (const auto& item : answer.gres_items) {
    predicted.push_back(trim_mask_to_box(
        segmenter.segment(scene, item.box, item.keypoint1, item.keypoint2),
        item.box));
  }
  return mask_iou(mask_union(predicted, gt.width, gt.height),
                  mask_union(gt.gres_masks, gt.width, gt.height));
}

RewardBreakdown reward_rec(std::string_view completion, const GroundTruth& gt,
                           const RewardWeights& weights, FormatCheck check) {
  const int format = format_reward(completion, Task::kRec, check);
  const auto parsed = parse_completion(completion, Task::kRec);
  double metrics = 0.0;
  if (parsed && gt.rec_box) metrics = box_iou(*parsed->rec_box, *gt.rec_box);
  return finish(format, metrics, weights);
}

RewardBreakdown reward_ovd(std::string_view completion, const GroundTruth& gt,
                           const RewardWeights& weights, FormatCheck check) {
  const int format = format_reward(completion, Task::kOvd, check);
  const auto parsed = parse_completion(completion, Task::kOvd);
  const double metrics = parsed ? ovd_metric(*parsed, gt) : 0.0;
  return finish(format, metrics, weights);
}

RewardBreakdown reward_gres(std::string_view completion, const GroundTruth& gt,
                            const Segmenter& segmenter, const Scene& scene,
                            const RewardWeights& weights, FormatCheck check) {
  const int format = format_reward(completion, Task::kGres, check);
  const auto parsed = parse_completion(completion, Task::kGres);
  const double metrics =
      parsed ? gres_metric(*parsed, gt, segmenter, scene) : 0.0;
  return finish(format, metrics, weights);
}

RewardBreakdown score_completion(std::string_view completion,
                                 const GroundTruth& gt, const Scene* scene,
                                 const Segmenter* segmenter,
                                 const RewardWeights& weights,
                                 FormatCheck check) {
  switch (gt.task) {
    case Task::kRec:
      return reward_rec(completion, gt, weights, check);
    case Task::kOvd:
      return reward_ovd(completion, gt, weights, check);
    case Task::kGres: {
      if (scene == nullptr) {
        throw std::invalid_argument("GRES scoring needs a scene");
      }
      static const ToySegmenter kDefault;
      return reward_gres(completion, gt, segmenter ? *segmenter : kDefault,
                         *scene, weights, check);
    }
  }
  return {};
}

}  // namespace georft
