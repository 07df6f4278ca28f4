#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "georft/geometry.hpp"
#include "georft/structured_output.hpp"

namespace georft {

class EvalError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using MetricTable = std::map<std::string, double>;

struct EvalReport {
  std::string task;
  MetricTable overall;
  MetricTable unique;
  MetricTable non_unique;
  std::map<std::string, MetricTable> per_category;
  std::size_t n = 0;
  std::size_t n_unique = 0;
  std::size_t n_non_unique = 0;
  // Optional provenance tags (cross-distribution runs).
  std::map<std::string, std::string> tags;

  nlohmann::json to_json() const;
};

/// Decoded box answer for one example. Greedy decoding can tie, in which
/// case every tied answer is listed and metrics average over them; an
/// unparseable answer is std::nullopt and always scores as a miss.
struct BoxPrediction {
  std::string id;
  std::vector<std::optional<BBox>> boxes;
};

struct BoxTarget {
  std::string id;
  BBox box;
  std::string category;
  bool unique = true;
};

/// Acc@tau (IoU strictly greater than tau) for every tau, plus mean IoU,
/// overall, per Unique/Non-Unique split, and per category. Throws EvalError
/// when ids do not line up.
EvalReport acc_at_tau(std::span<const BoxPrediction> predictions,
                      std::span<const BoxTarget> targets,
                      std::span<const double> taus);

std::string acc_key(double tau);

/// IoU thresholds 0.50:0.05:0.95.
std::vector<double> coco_iou_thresholds();

struct MapResult {
  double map = 0.0;
  // Category -> AP averaged over thresholds.
  std::map<std::string, double> per_category;
  // Threshold index -> AP averaged over categories.
  std::vector<double> per_threshold;
};

/// COCO-style mAP over a set of images. Predictions carry no scores: within
/// an image, earlier items rank higher; equal ranks across images are
/// evaluated as one block so the result does not depend on image order.
/// Only categories with at least one ground-truth box are averaged. With no
/// ground truth at all the result is 1 if nothing was predicted, else 0.
MapResult coco_map(std::span<const std::vector<LabeledBox>> predictions,
                   std::span<const std::vector<LabeledBox>> ground_truths,
                   std::span<const double> thresholds);

MapResult coco_map(std::span<const std::vector<LabeledBox>> predictions,
                   std::span<const std::vector<LabeledBox>> ground_truths);

/// Single-image convenience wrapper.
double single_image_map(const std::vector<LabeledBox>& predictions,
                        const std::vector<LabeledBox>& ground_truth);

/// Mean of per-example IoUs. Throws EvalError on an empty list.
double dataset_giou(std::span<const double> per_example_ious);

/// One entry of a sampling pool: its category and how many shots (boxes
/// or masks) it contributes.
struct ShotItem {
  std::string category;
  std::size_t shots = 1;
};

struct FewShotConfig {
  std::size_t shots = 10;
  // Empty means every category present in the pool.
  std::vector<std::string> categories;
  std::uint64_t seed = 0;
  bool nesting = true;
};

/// Indices into pool, sorted ascending. Per category, items are visited in
/// a seed-determined order and taken until the category holds at least
/// `shots` shots or runs out. With nesting, the visiting order does not
/// depend on `shots`, so smaller selections are prefixes of larger ones.
/// Throws EvalError when an item's category is not in cfg.categories.
std::vector<std::size_t> few_shot_sample(std::span<const ShotItem> pool,
                                         const FewShotConfig& cfg);

}  // namespace georft
