#include "georft/structured_output.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

namespace georft {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool all_space(std::string_view s) {
  return std::all_of(s.begin(), s.end(), is_space);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Offsets of every occurrence of needle in haystack.
std::vector<std::size_t> find_all(std::string_view haystack,
                                  std::string_view needle) {
  std::vector<std::size_t> hits;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + 1)) {
    hits.push_back(pos);
  }
  return hits;
}

// Body of the answer with an optional ```lang ... ``` fence removed.
// offset receives the position of the body within the original text.
std::optional<std::string_view> strip_fence(std::string_view text,
                                            std::size_t& offset) {
  std::size_t start = 0;
  while (start < text.size() && is_space(text[start])) ++start;
  std::string_view body = trim(text);
  offset = start;
  if (body.substr(0, 3) != "```") return body;
  std::size_t i = 3;
  while (i < body.size() && std::isalpha(static_cast<unsigned char>(body[i]))) {
    ++i;
  }
  const std::size_t close = body.rfind("```");
  if (close < i) return std::nullopt;
  offset += i;
  return body.substr(i, close - i);
}

struct JsonOutcome {
  nlohmann::json value;
  std::optional<ParseError> error;
};

JsonOutcome parse_json_body(std::string_view answer) {
  std::size_t offset = 0;
  const auto body = strip_fence(answer, offset);
  if (!body) return {{}, ParseError{answer.size(), "unterminated code fence"}};
  try {
    return {nlohmann::json::parse(body->begin(), body->end()), std::nullopt};
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    return {{}, ParseError{offset + at, "malformed JSON"}};
  }
}

bool is_none_literal(std::string_view answer) {
  std::size_t offset = 0;
  const auto body = strip_fence(answer, offset);
  return body && trim(*body) == "None";
}

std::optional<std::vector<double>> numbers(const nlohmann::json& j,
                                           std::size_t count) {
  if (!j.is_array() || j.size() != count) return std::nullopt;
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) return std::nullopt;
    const double d = v.get<double>();
    if (!std::isfinite(d)) return std::nullopt;
    out.push_back(d);
  }
  return out;
}

// Box from four coordinates with swapped corners repaired.
std::optional<BBox> box_from(const nlohmann::json& j) {
  const auto v = numbers(j, 4);
  if (!v) return std::nullopt;
  BBox b{std::min((*v)[0], (*v)[2]), std::min((*v)[1], (*v)[3]),
         std::max((*v)[0], (*v)[2]), std::max((*v)[1], (*v)[3])};
  if (!b.is_valid()) return std::nullopt;
  return b;
}

ParseError schema_error(std::string message) {
  return ParseError{0, std::move(message)};
}

std::string box_text(const BBox& b) {
  return "[" + format_number(b.x1) + ", " + format_number(b.y1) + ", " +
         format_number(b.x2) + ", " + format_number(b.y2) + "]";
}

std::string point_text(const Keypoint& p) {
  return "[" + format_number(p.x) + ", " + format_number(p.y) + "]";
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kRec:
      return "rec";
    case Task::kOvd:
      return "ovd";
    case Task::kGres:
      return "gres";
  }
  return "rec";
}

std::optional<Task> parse_task(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "rec") return Task::kRec;
  if (lower == "ovd") return Task::kOvd;
  if (lower == "gres") return Task::kGres;
  return std::nullopt;
}

ParsedAnswer ParsedAnswer::rec(const BBox& box) {
  ParsedAnswer a;
  a.task = Task::kRec;
  a.rec_box = box;
  return a;
}

ParsedAnswer ParsedAnswer::ovd(std::vector<LabeledBox> items, bool is_none) {
  ParsedAnswer a;
  a.task = Task::kOvd;
  a.ovd_items = std::move(items);
  a.is_none = is_none && a.ovd_items.empty();
  return a;
}

ParsedAnswer ParsedAnswer::gres(std::vector<GresItem> items, bool is_none) {
  ParsedAnswer a;
  a.task = Task::kGres;
  a.gres_items = std::move(items);
  a.is_none = is_none && a.gres_items.empty();
  return a;
}

std::size_t ParsedAnswer::object_count() const {
  switch (task) {
    case Task::kRec:
      return rec_box ? 1 : 0;
    case Task::kOvd:
      return ovd_items.size();
    case Task::kGres:
      return gres_items.size();
  }
  return 0;
}

ReasonedResponse extract_tagged(std::string_view raw) {
  ReasonedResponse out;
  const auto think_open = find_all(raw, kThinkOpen);
  const auto think_close = find_all(raw, kThinkClose);
  const auto answer_open = find_all(raw, kAnswerOpen);
  const auto answer_close = find_all(raw, kAnswerClose);
  if (think_open.size() != 1 || think_close.size() != 1 ||
      answer_open.size() != 1 || answer_close.size() != 1) {
    return out;
  }
  const std::size_t t0 = think_open[0] + kThinkOpen.size();
  const std::size_t t1 = think_close[0];
  const std::size_t a0 = answer_open[0] + kAnswerOpen.size();
  const std::size_t a1 = answer_close[0];
  if (!(t0 <= t1 && t1 + kThinkClose.size() <= answer_open[0] && a0 <= a1)) {
    return out;
  }
  if (!all_space(raw.substr(0, think_open[0])) ||
      !all_space(raw.substr(t1 + kThinkClose.size(),
                            answer_open[0] - t1 - kThinkClose.size())) ||
      !all_space(raw.substr(a1 + kAnswerClose.size()))) {
    return out;
  }
  out.think = std::string(trim(raw.substr(t0, t1 - t0)));
  out.answer = std::string(trim(raw.substr(a0, a1 - a0)));
  out.well_formed = true;
  return out;
}

ParseResult parse_rec(std::string_view answer) {
  auto parsed = parse_json_body(answer);
  if (parsed.error) return *parsed.error;
  const auto& j = parsed.value;
  const nlohmann::json* coords = &j;
  if (j.is_object()) {
    if (!j.contains("bbox_2d")) return schema_error("missing \"bbox_2d\"");
    coords = &j["bbox_2d"];
  }
  const auto box = box_from(*coords);
  if (!box) {
    return schema_error("expected four finite non-negative coordinates");
  }
  return ParsedAnswer::rec(*box);
}

ParseResult parse_ovd(std::string_view answer) {
  if (is_none_literal(answer)) return ParsedAnswer::ovd({}, true);
  auto parsed = parse_json_body(answer);
  if (parsed.error) return *parsed.error;
  const auto& j = parsed.value;
  if (!j.is_array()) return schema_error("expected a JSON array of detections");
  std::vector<LabeledBox> items;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& item = j[i];
    const std::string where = "detection " + std::to_string(i) + ": ";
    if (!item.is_object() || !item.contains("bbox_2d") ||
        !item.contains("label")) {
      return schema_error(where + "needs \"bbox_2d\" and \"label\"");
    }
    const auto box = box_from(item["bbox_2d"]);
    if (!box) return schema_error(where + "bad \"bbox_2d\"");
    if (!item["label"].is_string()) {
      return schema_error(where + "\"label\" must be a string");
    }
    items.push_back({*box, item["label"].get<std::string>()});
  }
  return ParsedAnswer::ovd(std::move(items));
}

ParseResult parse_gres(std::string_view answer) {
  if (is_none_literal(answer)) return ParsedAnswer::gres({}, true);
  auto parsed = parse_json_body(answer);
  if (parsed.error) return *parsed.error;
  const auto& j = parsed.value;
  if (!j.is_array()) return schema_error("expected a JSON array of objects");
  std::vector<GresItem> items;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& item = j[i];
    const std::string where = "object " + std::to_string(i) + ": ";
    if (!item.is_object() || !item.contains("bbox_2d") ||
        !item.contains("keypoint1") || !item.contains("keypoint2")) {
      return schema_error(where +
                          "needs \"bbox_2d\", \"keypoint1\", \"keypoint2\"");
    }
    const auto box = box_from(item["bbox_2d"]);
    if (!box) return schema_error(where + "bad \"bbox_2d\"");
    GresItem g;
    g.box = *box;
    std::array<Keypoint*, 2> points{&g.keypoint1, &g.keypoint2};
    std::array<const char*, 2> names{"keypoint1", "keypoint2"};
    for (std::size_t k = 0; k < 2; ++k) {
      const auto v = numbers(item[names[k]], 2);
      if (!v) return schema_error(where + "bad \"" + names[k] + "\"");
      const double x = std::clamp((*v)[0], box->x1, box->x2);
      const double y = std::clamp((*v)[1], box->y1, box->y2);
      if (x != (*v)[0] || y != (*v)[1]) g.keypoint_clamped = true;
      *points[k] = Keypoint{x, y};
    }
    items.push_back(g);
  }
  return ParsedAnswer::gres(std::move(items));
}

ParseResult parse_answer(Task task, std::string_view answer) {
  switch (task) {
    case Task::kRec:
      return parse_rec(answer);
    case Task::kOvd:
      return parse_ovd(answer);
    case Task::kGres:
      return parse_gres(answer);
  }
  return ParseError{0, "unknown task"};
}

int format_reward(std::string_view raw, Task task, FormatCheck check) {
  const auto response = extract_tagged(raw);
  if (!response.well_formed) return 0;
  if (check == FormatCheck::kTagsOnly) return 1;
  return parse_answer(task, response.answer).ok() ? 1 : 0;
}

std::string emit(const ParsedAnswer& answer) {
  switch (answer.task) {
    case Task::kRec:
      return answer.rec_box ? box_text(*answer.rec_box) : std::string("None");
    case Task::kOvd: {
      if (answer.is_none) return "None";
      if (answer.ovd_items.empty()) return "[]";
      std::string out = "```json\n[\n";
      for (std::size_t i = 0; i < answer.ovd_items.size(); ++i) {
        const auto& item = answer.ovd_items[i];
        out += "{\n    \"bbox_2d\": " + box_text(item.box) +
               ",\n    \"label\": " + nlohmann::json(item.label).dump() +
               "\n}";
        out += i + 1 < answer.ovd_items.size() ? ",\n" : "\n";
      }
      return out + "]\n```";
    }
    case Task::kGres: {
      if (answer.is_none) return "None";
      if (answer.gres_items.empty()) return "[]";
      std::string out = "```json\n[\n";
      for (std::size_t i = 0; i < answer.gres_items.size(); ++i) {
        const auto& item = answer.gres_items[i];
        out += "{\n    \"bbox_2d\": " + box_text(item.box) +
               ",\n    \"keypoint1\": " + point_text(item.keypoint1) +
               ",\n    \"keypoint2\": " + point_text(item.keypoint2) + "\n}";
        out += i + 1 < answer.gres_items.size() ? ",\n" : "\n";
      }
      return out + "]\n```";
    }
  }
  return {};
}

std::string wrap_completion(std::string_view think, std::string_view answer) {
  std::string out;
  out.reserve(think.size() + answer.size() + 40);
  out += kThinkOpen;
  out += think;
  out += kThinkClose;
  out += kAnswerOpen;
  out += answer;
  out += kAnswerClose;
  return out;
}

std::string rec_prompt(std::string_view query) {
  return "Please provide the bounding box coordinates of the region this "
         "sentence describes: " +
         std::string(query) + ".";
}

std::string ovd_prompt(const std::vector<std::string>& targets) {
  std::string list;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (i > 0) list += ", ";
    list += targets[i];
  }
  return "Please carefully check the image and detect the following "
         "objects: " +
         list +
         ".\nOutput each detected target's bbox coordinates in JSON format. "
         "The format of the bbox coordinates is:\n"
         "```json\n[\n{\n    \"bbox_2d\": [x1, y1, x2, y2], \n"
         "    \"label\": \"category name\"\n},\n{\n"
         "    \"bbox_2d\": [x1, y1, x2, y2], \n"
         "    \"label\": \"category name\"\n}\n]\n```\n"
         "If there are no such targets in the image, simply respond with "
         "None.";
}

std::string gres_prompt(std::string_view query) {
  return "Please carefully check the image and answer: " + std::string(query) +
         ". Based on your answer, detect all relevant objects in the image. "
         "Output each detected target's bbox coordinates in JSON format. The "
         "format of the bbox coordinates is:\n"
         "```json\n[\n{\n    \"bbox_2d\": [x1, y1, x2, y2], \n"
         "    \"keypoint1\": [x3, y3], \n    \"keypoint2\": [x4, y4]\n},\n"
         "{\n    \"bbox_2d\": [x1, y1, x2, y2],\n"
         "    \"keypoint1\": [x3, y3],\n    \"keypoint2\": [x4, y4]\n}\n]\n```";
}

std::string thinking_prompt(std::string_view problem) {
  return std::string(problem) +
         " Output the thinking process in <think> </think> and final answer "
         "in <answer> </answer> tags.";
}

std::string format_number(double value) {
  if (std::isfinite(value) && value == std::trunc(value) &&
      std::fabs(value) < 1e15) {
    return std::to_string(static_cast<long long>(value));
  }
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

}  // namespace georft
