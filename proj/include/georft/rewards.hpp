#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "georft/geometry.hpp"
#include "georft/scene.hpp"
#include "georft/structured_output.hpp"

namespace georft {

struct RewardWeights {
  double format = 1.0;
  double metrics = 1.0;
};

struct RewardBreakdown {
  int format = 0;
  double metrics = 0.0;
  double total = 0.0;
  double weight_format = 1.0;
  double weight_metrics = 1.0;
};

struct GroundTruth {
  Task task = Task::kRec;
  std::optional<BBox> rec_box;
  std::vector<LabeledBox> ovd_items;
  std::vector<BinaryMask> gres_masks;
  int width = 0;
  int height = 0;

  std::size_t object_count() const;
};

/// Prompted segmentation: (scene, box, keypoint, keypoint) -> mask on the
/// scene canvas. Implementations must be deterministic.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual BinaryMask segment(const Scene& scene, const BBox& box,
                             const Keypoint& keypoint1,
                             const Keypoint& keypoint2) const = 0;
};

/// Returns the mask of the scene object containing keypoint1 (best box
/// match when several do), clipped to the prompt box; falls back to the
/// rasterized box when no object contains the keypoint. keypoint2 is
/// ignored.
class ToySegmenter final : public Segmenter {
 public:
  BinaryMask segment(const Scene& scene, const BBox& box,
                     const Keypoint& keypoint1,
                     const Keypoint& keypoint2) const override;
};

/// Throws std::invalid_argument on negative weights.
double combine(int format, double metrics, const RewardWeights& weights = {});

RewardBreakdown reward_rec(std::string_view completion, const GroundTruth& gt,
                           const RewardWeights& weights = {},
                           FormatCheck check = FormatCheck::kStrict);

RewardBreakdown reward_ovd(std::string_view completion, const GroundTruth& gt,
                           const RewardWeights& weights = {},
                           FormatCheck check = FormatCheck::kStrict);

RewardBreakdown reward_gres(std::string_view completion, const GroundTruth& gt,
                            const Segmenter& segmenter, const Scene& scene,
                            const RewardWeights& weights = {},
                            FormatCheck check = FormatCheck::kStrict);

/// Dispatches on gt.task. GRES needs a scene and segmenter.
RewardBreakdown score_completion(std::string_view completion,
                                 const GroundTruth& gt, const Scene* scene,
                                 const Segmenter* segmenter,
                                 const RewardWeights& weights = {},
                                 FormatCheck check = FormatCheck::kStrict);

// Metric parts, exposed for the evaluation code and tests.

/// min(1, sqrt(n_gt / n_pred)); 1 when n_pred == 0.
double overlength_penalty(std::size_t n_gt, std::size_t n_pred);

double ovd_metric(const ParsedAnswer& answer, const GroundTruth& gt);

double gres_metric(const ParsedAnswer& answer, const GroundTruth& gt,
                   const Segmenter& segmenter, const Scene& scene);

/// Lowercased, trimmed, inner whitespace collapsed.
std::string normalize_label(std::string_view label);

}  // namespace georft
