#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "georft/geometry.hpp"

namespace georft {

enum class Task { kRec, kOvd, kGres };

std::string_view task_name(Task task);
/// Accepts "rec" / "ovd" / "gres" (case-insensitive).
std::optional<Task> parse_task(std::string_view name);

/// Completion split into its <think> and <answer> sections.
struct ReasonedResponse {
  std::string think;
  std::string answer;
  bool well_formed = false;
};

struct LabeledBox {
  BBox box;
  std::string label;

  friend bool operator==(const LabeledBox&, const LabeledBox&) = default;
};

struct GresItem {
  BBox box;
  Keypoint keypoint1;
  Keypoint keypoint2;
  // Set when either keypoint had to be clamped into the box.
  bool keypoint_clamped = false;

  friend bool operator==(const GresItem&, const GresItem&) = default;
};

struct ParsedAnswer {
  Task task = Task::kRec;
  std::optional<BBox> rec_box;
  std::vector<LabeledBox> ovd_items;
  std::vector<GresItem> gres_items;
  bool is_none = false;

  static ParsedAnswer rec(const BBox& box);
  static ParsedAnswer ovd(std::vector<LabeledBox> items, bool is_none = false);
  static ParsedAnswer gres(std::vector<GresItem> items, bool is_none = false);

  /// Number of predicted objects (N).
  std::size_t object_count() const;

  friend bool operator==(const ParsedAnswer&, const ParsedAnswer&) = default;
};

struct ParseError {
  std::size_t position = 0;
  std::string message;
};

/// Either a parsed answer or the reason parsing failed.
class ParseResult {
 public:
  ParseResult(ParsedAnswer answer) : value_(std::move(answer)) {}
  ParseResult(ParseError error) : value_(std::move(error)) {}

  bool ok() const { return std::holds_alternative<ParsedAnswer>(value_); }
  explicit operator bool() const { return ok(); }
  const ParsedAnswer& value() const { return std::get<ParsedAnswer>(value_); }
  const ParseError& error() const { return std::get<ParseError>(value_); }

 private:
  std::variant<ParsedAnswer, ParseError> value_;
};

/// Never throws. well_formed requires exactly one think section followed by
/// exactly one answer section and nothing but whitespace outside them.
ReasonedResponse extract_tagged(std::string_view raw);

ParseResult parse_rec(std::string_view answer);
ParseResult parse_ovd(std::string_view answer);
ParseResult parse_gres(std::string_view answer);
ParseResult parse_answer(Task task, std::string_view answer);

enum class FormatCheck {
  kStrict,    // tags and task grammar
  kTagsOnly,  // tag structure only
};

int format_reward(std::string_view raw, Task task,
                  FormatCheck check = FormatCheck::kStrict);

/// Canonical text for an answer body; parse_answer(task, emit(a)) == a.
std::string emit(const ParsedAnswer& answer);

/// Wraps a rationale and answer body in the think/answer tags.
std::string wrap_completion(std::string_view think, std::string_view answer);

// Prompt templates.
std::string rec_prompt(std::string_view query);
std::string ovd_prompt(const std::vector<std::string>& targets);
std::string gres_prompt(std::string_view query);
std::string thinking_prompt(std::string_view problem);

/// Shortest decimal that reads back to the same double; integral values
/// print without a fractional part.
std::string format_number(double value);

}  // namespace georft
