#include "georft/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "georft/rewards.hpp"
#include "georft/util.hpp"

namespace georft {

namespace {

constexpr int kRecallPoints = 101;

struct SplitAccumulator {
  std::vector<double> hits;  // per tau
  double iou_sum = 0.0;
  std::size_t n = 0;

  explicit SplitAccumulator(std::size_t taus = 0) : hits(taus, 0.0) {}

  void add(std::span<const double> tau_hits, double iou) {
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i] += tau_hits[i];
    iou_sum += iou;
    ++n;
  }

  MetricTable table(std::span<const double> taus) const {
    MetricTable t;
    const double denom = n == 0 ? 1.0 : static_cast<double>(n);
    for (std::size_t i = 0; i < taus.size(); ++i) {
      t[acc_key(taus[i])] = n == 0 ? 0.0 : hits[i] / denom;
    }
    t["mean_iou"] = n == 0 ? 0.0 : iou_sum / denom;
    t["count"] = static_cast<double>(n);
    return t;
  }
};

// Per-detection outcome at one threshold, tagged with its rank.
struct Outcome {
  std::size_t rank;
  bool true_positive;
};

// Greedy matching inside one image for one category: detections in rank
// order, each claims the unmatched ground truth with the highest IoU at or
// above the threshold.
void match_image(const std::vector<BBox>& dets, const std::vector<BBox>& gts,
                 double threshold, std::vector<Outcome>& out) {
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t d = 0; d < dets.size(); ++d) {
    double best = -1.0;
    std::ptrdiff_t best_g = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double iou = box_iou(dets[d], gts[g]);
      if (iou >= threshold && iou > best) {
        best = iou;
        best_g = static_cast<std::ptrdiff_t>(g);
      }
    }
    if (best_g >= 0) taken[static_cast<std::size_t>(best_g)] = true;
    out.push_back({d, best_g >= 0});
  }
}

double average_precision(std::vector<Outcome> outcomes, std::size_t n_gt) {
  std::stable_sort(outcomes.begin(), outcomes.end(),
                   [](const Outcome& a, const Outcome& b) {
                     return a.rank < b.rank;
                   });
  // PR points only at the end of each equal-rank block.
  std::vector<std::size_t> tp_at;
  std::vector<double> precision;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    outcomes[i].true_positive ? ++tp : ++fp;
    const bool block_end =
        i + 1 == outcomes.size() || outcomes[i + 1].rank != outcomes[i].rank;
    if (block_end) {
      tp_at.push_back(tp);
      precision.push_back(static_cast<double>(tp) /
                          static_cast<double>(tp + fp));
    }
  }
  for (std::size_t k = precision.size(); k-- > 1;) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  double sum = 0.0;
  std::size_t k = 0;
  for (int i = 0; i < kRecallPoints; ++i) {
    // recall >= i/100  <=>  100*tp >= i*n_gt
    while (k < tp_at.size() &&
           100 * tp_at[k] < static_cast<std::size_t>(i) * n_gt) {
      ++k;
    }
    if (k < tp_at.size()) sum += precision[k];
  }
  return sum / kRecallPoints;
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["task"] = task;
  j["overall"] = overall;
  j["unique"] = unique;
  j["non_unique"] = non_unique;
  j["per_category"] = per_category;
  j["n"] = n;
  j["n_unique"] = n_unique;
  j["n_non_unique"] = n_non_unique;
  if (!tags.empty()) j["tags"] = tags;
  return j;
}

std::string acc_key(double tau) {
  std::ostringstream os;
  os << "acc@" << tau;
  return os.str();
}

EvalReport acc_at_tau(std::span<const BoxPrediction> predictions,
                      std::span<const BoxTarget> targets,
                      std::span<const double> taus) {
  if (predictions.size() != targets.size()) {
    throw EvalError("prediction/target count mismatch");
  }
  for (double tau : taus) {
    if (!(tau > 0.0 && tau < 1.0)) throw EvalError("tau must lie in (0, 1)");
  }
  SplitAccumulator all(taus.size()), uniq(taus.size()), non_uniq(taus.size());
  std::map<std::string, SplitAccumulator> by_cat;
  std::vector<double> tau_hits(taus.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& p = predictions[i];
    const auto& t = targets[i];
    if (p.id != t.id) {
      throw EvalError("example id mismatch at " + std::to_string(i) + ": \"" +
                      p.id + "\" vs \"" + t.id + "\"");
    }
    std::fill(tau_hits.begin(), tau_hits.end(), 0.0);
    double iou_mean = 0.0;
    const double weight =
        p.boxes.empty() ? 0.0 : 1.0 / static_cast<double>(p.boxes.size());
    for (const auto& box : p.boxes) {
      const double iou = box ? box_iou(*box, t.box) : 0.0;
      iou_mean += weight * iou;
      for (std::size_t k = 0; k < taus.size(); ++k) {
        if (iou > taus[k]) tau_hits[k] += weight;
      }
    }
    all.add(tau_hits, iou_mean);
    (t.unique ? uniq : non_uniq).add(tau_hits, iou_mean);
    auto [it, inserted] = by_cat.try_emplace(t.category, taus.size());
    it->second.add(tau_hits, iou_mean);
  }
  EvalReport r;
  r.task = "rec";
  r.overall = all.table(taus);
  r.unique = uniq.table(taus);
  r.non_unique = non_uniq.table(taus);
  for (const auto& [cat, acc] : by_cat) r.per_category[cat] = acc.table(taus);
  r.n = all.n;
  r.n_unique = uniq.n;
  r.n_non_unique = non_uniq.n;
  return r;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50.0 + 5.0 * i) / 100.0);
  return t;
}

MapResult coco_map(std::span<const std::vector<LabeledBox>> predictions,
                   std::span<const std::vector<LabeledBox>> ground_truths,
                   std::span<const double> thresholds) {
  if (predictions.size() != ground_truths.size()) {
    throw EvalError("prediction/ground-truth image count mismatch");
  }
  MapResult result;
  result.per_threshold.assign(thresholds.size(), 0.0);
  std::set<std::string> categories;
  std::size_t n_pred = 0;
  for (const auto& img : ground_truths) {
    for (const auto& g : img) categories.insert(normalize_label(g.label));
  }
  for (const auto& img : predictions) n_pred += img.size();
  if (categories.empty()) {
    result.map = n_pred == 0 ? 1.0 : 0.0;
    std::fill(result.per_threshold.begin(), result.per_threshold.end(),
              result.map);
    return result;
  }

  double map_sum = 0.0;
  for (const auto& cat : categories) {
    // Per-image boxes of this category, detections kept in emission order.
    std::vector<std::vector<BBox>> dets(predictions.size());
    std::vector<std::vector<BBox>> gts(predictions.size());
    std::vector<std::vector<std::size_t>> ranks(predictions.size());
    std::size_t n_gt = 0;
    for (std::size_t img = 0; img < predictions.size(); ++img) {
      for (std::size_t k = 0; k < predictions[img].size(); ++k) {
        if (normalize_label(predictions[img][k].label) == cat) {
          dets[img].push_back(predictions[img][k].box);
          ranks[img].push_back(k);
        }
      }
      for (const auto& g : ground_truths[img]) {
        if (normalize_label(g.label) == cat) gts[img].push_back(g.box);
      }
      n_gt += gts[img].size();
    }
    double cat_sum = 0.0;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      std::vector<Outcome> outcomes;
      for (std::size_t img = 0; img < predictions.size(); ++img) {
        std::vector<Outcome> local;
        match_image(dets[img], gts[img], thresholds[t], local);
        for (auto& o : local) {
          outcomes.push_back({ranks[img][o.rank], o.true_positive});
        }
      }
      const double ap = average_precision(std::move(outcomes), n_gt);
      cat_sum += ap;
      result.per_threshold[t] += ap / static_cast<double>(categories.size());
    }
    const double cat_ap = cat_sum / static_cast<double>(thresholds.size());
    result.per_category[cat] = cat_ap;
    map_sum += cat_ap;
  }
  result.map = map_sum / static_cast<double>(categories.size());
  return result;
}

MapResult coco_map(std::span<const std::vector<LabeledBox>> predictions,
                   std::span<const std::vector<LabeledBox>> ground_truths) {
  const auto thresholds = coco_iou_thresholds();
  return coco_map(predictions, ground_truths, thresholds);
}

double single_image_map(const std::vector<LabeledBox>& predictions,
                        const std::vector<LabeledBox>& ground_truth) {
  return coco_map(std::span(&predictions, 1), std::span(&ground_truth, 1)).map;
}

double dataset_giou(std::span<const double> per_example_ious) {
  if (per_example_ious.empty()) {
    throw EvalError("gIoU needs at least one example");
  }
  double sum = 0.0;
  for (double v : per_example_ious) sum += v;
  return sum / static_cast<double>(per_example_ious.size());
}

std::vector<std::size_t> few_shot_sample(std::span<const ShotItem> pool,
                                         const FewShotConfig& cfg) {
  std::vector<std::string> categories = cfg.categories;
  if (categories.empty()) {
    std::set<std::string> seen;
    for (const auto& item : pool) seen.insert(item.category);
    categories.assign(seen.begin(), seen.end());
  }
  const std::set<std::string> known(categories.begin(), categories.end());
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!known.count(pool[i].category)) {
      throw EvalError("unknown category \"" + pool[i].category +
                      "\" at pool index " + std::to_string(i));
    }
    members[pool[i].category].push_back(i);
  }
  std::vector<std::size_t> selected;
  for (const auto& cat : known) {
    auto it = members.find(cat);
    if (it == members.end()) continue;
    auto order = it->second;
    std::uint64_t stream = fnv1a(cat);
    if (!cfg.nesting) stream = mix_seed(stream, cfg.shots);
    std::mt19937_64 rng(mix_seed(cfg.seed, stream));
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t shots = 0;
    for (std::size_t idx : order) {
      if (shots >= cfg.shots) break;
      selected.push_back(idx);
      shots += std::max<std::size_t>(pool[idx].shots, 1);
    }
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

}  // namespace georft
