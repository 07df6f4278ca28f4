#include <doctest.h>

#include <random>

#include "georft/structured_output.hpp"

using namespace georft;

TEST_SUITE("structured_output") {

TEST_CASE("tag extraction") {
  auto r = extract_tagged("<think> a b </think>\n<answer> [1, 2, 3, 4] </answer>\n");
  CHECK(r.well_formed);
  CHECK(r.think == "a b");
  CHECK(r.answer == "[1, 2, 3, 4]");

  for (const char* bad : {
           "<answer>x</answer><think>y</think>",
           "<think>y</think>",
           "<think>y</think><answer>x",
           "x<think>y</think><answer>x</answer>",
           "<think>y</think>x<answer>x</answer>",
           "<think>y</think><answer>x</answer>.",
           "<think>y</think><think>y</think><answer>x</answer>",
           "<think>y<answer>x</answer></think>",
           "<THINK>y</THINK><answer>x</answer>",
           ""}) {
    const auto e = extract_tagged(bad);
    CHECK_MESSAGE(!e.well_formed, bad);
    CHECK(e.answer.empty());
  }
}

TEST_CASE("REC grammar") {
  CHECK(parse_rec("[1, 2, 3, 4]").value().rec_box == BBox{1, 2, 3, 4});
  CHECK(parse_rec("{\"bbox_2d\": [1, 2, 3, 4]}").value().rec_box == BBox{1, 2, 3, 4});
  CHECK(parse_rec("```json\n[1.5, 2, 3, 4]\n```").value().rec_box == BBox{1.5, 2, 3, 4});
  // Swapped corners are repaired.
  CHECK(parse_rec("[3, 4, 1, 2]").value().rec_box == BBox{1, 2, 3, 4});
  CHECK_FALSE(parse_rec("[1, 2, 3]"));
  CHECK_FALSE(parse_rec("[-1, 2, 3, 4]"));
  CHECK_FALSE(parse_rec("[1, 2, 3, \"4\"]"));
  CHECK_FALSE(parse_rec("None"));
  CHECK_FALSE(parse_rec("{\"box\": [1, 2, 3, 4]}"));
}

TEST_CASE("parse errors carry a position") {
  const auto r = parse_rec("[1, 2, 3,, 4]");
  REQUIRE_FALSE(r);
  CHECK(r.error().position == 9);
  const auto f = parse_rec("  ```json\n[1, 2 3]\n```");
  REQUIRE_FALSE(f);
  CHECK(f.error().position == 16);
}

TEST_CASE("OVD grammar") {
  const auto none = parse_ovd("None");
  REQUIRE(none);
  CHECK(none.value().is_none);
  CHECK(none.value().object_count() == 0);
  const auto empty = parse_ovd("[]");
  REQUIRE(empty);
  CHECK_FALSE(empty.value().is_none);
  const auto two = parse_ovd(R"([{"bbox_2d": [0, 0, 2, 2], "label": "ship"},
                                 {"bbox_2d": [1, 1, 3, 3], "label": "plane"}])");
  REQUIRE(two);
  CHECK(two.value().ovd_items.size() == 2);
  CHECK(two.value().ovd_items[1].label == "plane");
  CHECK_FALSE(parse_ovd(R"([{"bbox_2d": [0, 0, 2, 2]}])"));
  CHECK_FALSE(parse_ovd(R"([{"bbox_2d": [0, 0, 2, 2], "label": 3}])"));
  CHECK_FALSE(parse_ovd(R"({"bbox_2d": [0, 0, 2, 2], "label": "ship"})"));
}

TEST_CASE("GRES keypoints are clamped into their box") {
  const auto r = parse_gres(
      R"([{"bbox_2d": [10, 10, 20, 20], "keypoint1": [5, 15], "keypoint2": [12, 30]}])");
  REQUIRE(r);
  const auto& it = r.value().gres_items[0];
  CHECK(it.keypoint1 == Keypoint{10, 15});
  CHECK(it.keypoint2 == Keypoint{12, 20});
  CHECK(it.keypoint_clamped);
  CHECK_FALSE(parse_gres(R"([{"bbox_2d": [10, 10, 20, 20], "keypoint1": [5, 15]}])"));
  CHECK(parse_gres("None").value().is_none);
}

TEST_CASE("format reward") {
  CHECK(format_reward("<think>x</think><answer>[1,2,3,4]</answer>", Task::kRec) == 1);
  CHECK(format_reward("<think>x</think><answer>[1,2,3]</answer>", Task::kRec) == 0);
  CHECK(format_reward("<think>x</think><answer>[1,2,3]</answer>", Task::kRec,
                      FormatCheck::kTagsOnly) == 1);
  CHECK(format_reward("<think>x</think><answer>None</answer>", Task::kOvd) == 1);
  CHECK(format_reward("<think>x</think><answer>None</answer>", Task::kRec) == 0);
}

TEST_CASE("emit/parse round trip on random answers") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 500.0);
  auto rand_box = [&] {
    double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    if (rng() % 2) {  // integral coordinates
      a = std::floor(a), b = std::floor(b), c = std::floor(c), d = std::floor(d);
    }
    return BBox{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
  };
  const char* labels[] = {"ship", "Storage Tank", "a \"quoted\" name", "ünïcode"};
  for (int t = 0; t < 300; ++t) {
    std::vector<ParsedAnswer> answers;
    answers.push_back(ParsedAnswer::rec(rand_box()));
    std::vector<LabeledBox> ovd;
    std::vector<GresItem> gres;
    const int n = static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) {
      ovd.push_back({rand_box(), labels[rng() % 4]});
      const BBox b = rand_box();
      gres.push_back({b, {b.x1, b.center_y()}, {b.center_x(), b.y2}, false});
    }
    answers.push_back(ParsedAnswer::ovd(ovd, n == 0 && t % 2));
    answers.push_back(ParsedAnswer::gres(gres, n == 0 && t % 2));
    for (const auto& a : answers) {
      const auto text = emit(a);
      const auto back = parse_answer(a.task, text);
      REQUIRE_MESSAGE(back, text);
      CHECK(back.value() == a);
      CHECK(emit(back.value()) == text);
      CHECK(format_reward(wrap_completion("t", text), a.task) == 1);
    }
  }
}

TEST_CASE("number formatting") {
  CHECK(format_number(3.0) == "3");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(2.5e-7) == "2.5e-07");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("task names") {
  CHECK(parse_task("REC") == Task::kRec);
  CHECK(parse_task("gres") == Task::kGres);
  CHECK_FALSE(parse_task("seg"));
  CHECK(task_name(Task::kOvd) == "ovd");
}

}
