#include <doctest.h>

#include <cmath>

#include "georft/rewards.hpp"
#include "georft/toy_env.hpp"
#include "oracles.hpp"

using namespace georft;

namespace {

GroundTruth rec_gt(BBox b) {
  GroundTruth gt;
  gt.task = Task::kRec;
  gt.rec_box = b;
  gt.width = gt.height = 64;
  return gt;
}

GroundTruth ovd_gt(std::vector<LabeledBox> items) {
  GroundTruth gt;
  gt.task = Task::kOvd;
  gt.ovd_items = std::move(items);
  gt.width = gt.height = 64;
  return gt;
}

std::string ovd_text(const std::vector<LabeledBox>& items) {
  return wrap_completion("t", emit(ParsedAnswer::ovd(items)));
}

}  // namespace

TEST_SUITE("rewards") {

TEST_CASE("REC reward is format plus IoU") {
  const auto gt = rec_gt({0, 0, 10, 10});
  auto r = reward_rec("<think>t</think><answer>[0, 0, 10, 20]</answer>", gt);
  CHECK(r.format == 1);
  CHECK(r.metrics == 0.5);
  CHECK(r.total == 1.5);
  r = reward_rec("<think>t</think><answer>[0, 0, 10, 20]", gt);
  CHECK(r.format == 0);
  CHECK(r.metrics == 0.0);
  CHECK(r.total == 0.0);
  r = reward_rec("<think>t</think><answer>[0, 0, 10, 10]</answer>", gt, {0.5, 2.0});
  CHECK(r.total == 2.5);
  CHECK(r.weight_format == 0.5);
  CHECK_THROWS_AS(reward_rec("", gt, {-1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("tags-only check still needs a parse for metrics") {
  const auto gt = rec_gt({0, 0, 10, 10});
  const auto r = reward_rec("<think>t</think><answer>[0, 0, 10]</answer>", gt, {},
                            FormatCheck::kTagsOnly);
  CHECK(r.format == 1);
  CHECK(r.metrics == 0.0);
}

TEST_CASE("over-length penalty") {
  CHECK(overlength_penalty(2, 0) == 1.0);
  CHECK(overlength_penalty(0, 0) == 1.0);
  CHECK(overlength_penalty(2, 4) == std::sqrt(0.5));
  CHECK(overlength_penalty(4, 2) == 1.0);
  CHECK(overlength_penalty(0, 3) == 0.0);
}

TEST_CASE("OVD reward hand cases") {
  const auto gt = ovd_gt({{{0, 0, 10, 10}, "ship"}, {{20, 20, 30, 30}, "ship"}});
  const LabeledBox hit1{{0, 0, 10, 10}, "ship"}, hit2{{20, 20, 30, 30}, "ship"};
  const LabeledBox miss1{{40, 40, 50, 50}, "ship"}, miss2{{50, 0, 60, 10}, "ship"};
  // Hits first: AP 1, penalty sqrt(2/4).
  CHECK(reward_ovd(ovd_text({hit1, hit2, miss1, miss2}), gt).metrics == std::sqrt(0.5));
  // Misses first: interpolated precision is 1/2 at every recall level.
  CHECK(reward_ovd(ovd_text({miss1, miss2, hit1, hit2}), gt).metrics ==
        doctest::Approx(0.5 * std::sqrt(0.5)).epsilon(1e-15));
  // One perfect detection of two: recall 1/2 reached at precision 1.
  CHECK(reward_ovd(ovd_text({hit1}), gt).metrics == doctest::Approx(51.0 / 101.0).epsilon(1e-15));
  // Labels are compared after normalization.
  CHECK(reward_ovd(ovd_text({{{0, 0, 10, 10}, "  Ship "}, hit2}), gt).metrics == 1.0);
  CHECK(reward_ovd(wrap_completion("t", "None"), gt).metrics == 0.0);
}

TEST_CASE("OVD with absent category") {
  const auto gt = ovd_gt({});
  CHECK(reward_ovd(wrap_completion("t", "None"), gt).total == 2.0);
  CHECK(reward_ovd(wrap_completion("t", "[]"), gt).total == 2.0);
  CHECK(reward_ovd(ovd_text({{{0, 0, 1, 1}, "ship"}}), gt).metrics == 0.0);
}

TEST_CASE("normalize label") {
  CHECK(normalize_label("  Storage   Tank\t") == "storage tank");
  CHECK(normalize_label("") == "");
}

TEST_CASE("segmenter picks the object under the keypoint") {
  Scene s;
  s.width = s.height = 32;
  s.objects = {{Shape::kRect, {2, 2, 12, 12}, "a", 0},
               {Shape::kEllipse, {8, 8, 24, 24}, "b", 0}};
  const ToySegmenter seg;
  // Keypoint inside object a only.
  auto m = seg.segment(s, {2, 2, 12, 12}, {3, 3}, {0, 0});
  CHECK(m == object_mask(s.objects[0], 32, 32));
  // Keypoint inside both: the prompt box decides.
  m = seg.segment(s, {8, 8, 24, 24}, {10.5, 10.5}, {0, 0});
  CHECK(m == trim_mask_to_box(object_mask(s.objects[1], 32, 32), {8, 8, 24, 24}));
  // Trimmed to a smaller prompt box.
  m = seg.segment(s, {2, 2, 6, 6}, {3, 3}, {0, 0});
  CHECK(m.area() == 16);
  // Nothing under the keypoint: box fallback.
  m = seg.segment(s, {26, 26, 30, 30}, {27, 27}, {0, 0});
  CHECK(m == rasterize_box({26, 26, 30, 30}, 32, 32));
}

TEST_CASE("GRES reward against pixel loop") {
  for (int seed = 0; seed < 40; ++seed) {
    const auto scene = generate_scene(seed, seed % 5);
    const auto ex = make_example(scene, seed, Task::kGres);
    std::vector<GresItem> items;
    for (auto t : ex.targets) {
      const auto& o = scene.objects[t];
      items.push_back({o.bbox, object_centroid(o), object_secondary_point(o), false});
    }
    const auto text = wrap_completion("t", emit(ParsedAnswer::gres(items, items.empty())));
    const auto r = reward_gres(text, ex.gt, ToySegmenter{}, scene);
    CHECK(r.metrics == oracle::gres_iou(scene, items, ex.targets));
    CHECK(r.metrics == 1.0);
  }
}

TEST_CASE("GRES canvas mismatch and missing scene") {
  const auto scene = generate_scene(1, 2);
  auto ex = make_example(scene, 1, Task::kGres);
  ex.gt.width += 1;
  CHECK_THROWS_AS(reward_gres(wrap_completion("t", "None"), ex.gt, ToySegmenter{}, scene),
                  GeometryError);
  CHECK_THROWS(score_completion("x", make_example(scene, 1, Task::kGres).gt, nullptr, nullptr));
}

}
