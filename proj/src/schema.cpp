#include "georft/schema.hpp"

#include <cmath>

#include "georft/checkpoint.hpp"
#include "georft/geometry.hpp"
#include "georft/records.hpp"
#include "georft/service.hpp"

namespace georft::schema {

namespace {

void need_number(const nlohmann::json& j, const std::string& key, Errors& out) {
  if (!j.contains(key)) {
    out.push_back("missing \"" + key + "\"");
  } else if (!j[key].is_number() || !std::isfinite(j[key].get<double>())) {
    out.push_back("\"" + key + "\" must be a finite number");
  }
}

void need_unsigned(const nlohmann::json& j, const std::string& key,
                   Errors& out) {
  if (!j.contains(key)) {
    out.push_back("missing \"" + key + "\"");
  } else if (!j[key].is_number_unsigned()) {
    out.push_back("\"" + key + "\" must be a non-negative integer");
  }
}

void need_table(const nlohmann::json& j, const std::string& key, Errors& out) {
  if (!j.contains(key) || !j[key].is_object()) {
    out.push_back("\"" + key + "\" must be an object");
    return;
  }
  for (const auto& [k, v] : j[key].items()) {
    if (!v.is_number()) out.push_back("\"" + key + "." + k + "\" is not a number");
  }
}

template <typename F>
Errors guard(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return {e.what()};
  }
  return {};
}

}  // namespace

Errors validate_rle(const nlohmann::json& j) {
  return guard([&] { BinaryMask::from_json(j); });
}

Errors validate_record(const nlohmann::json& j) {
  return guard([&] { SceneRecord::from_json(j); });
}

Errors validate_eval_report(const nlohmann::json& j) {
  Errors out;
  if (!j.is_object()) return {"report must be an object"};
  if (!j.contains("task") || !j["task"].is_string() ||
      !parse_task(j["task"].get<std::string>())) {
    out.push_back("\"task\" must be rec, ovd or gres");
  }
  need_table(j, "overall", out);
  need_table(j, "unique", out);
  need_table(j, "non_unique", out);
  if (!j.contains("per_category") || !j["per_category"].is_object()) {
    out.push_back("\"per_category\" must be an object");
  } else {
    for (const auto& [cat, _] : j["per_category"].items()) {
      need_table(j["per_category"], cat, out);
    }
  }
  need_unsigned(j, "n", out);
  need_unsigned(j, "n_unique", out);
  need_unsigned(j, "n_non_unique", out);
  if (out.empty() && j["n"].get<std::size_t>() !=
                         j["n_unique"].get<std::size_t>() +
                             j["n_non_unique"].get<std::size_t>()) {
    out.push_back("n must equal n_unique + n_non_unique");
  }
  if (j.contains("tags") && !j["tags"].is_object()) {
    out.push_back("\"tags\" must be an object");
  }
  return out;
}

Errors validate_diagnostics_line(const nlohmann::json& j) {
  if (!j.is_object()) return {"diagnostics line must be an object"};
  Errors out;
  need_unsigned(j, "step", out);
  for (const char* k : {"objective", "mean_reward", "mean_kl", "clip_frac"}) {
    need_number(j, k, out);
  }
  need_unsigned(j, "filtered_groups", out);
  if (out.empty()) {
    const double c = j["clip_frac"].get<double>();
    if (c < 0.0 || c > 1.0) out.push_back("clip_frac must lie in [0, 1]");
  }
  return out;
}

Errors validate_checkpoint(const nlohmann::json& j) {
  Errors out = guard([&] { Checkpoint::from_json(j); });
  if (!out.empty()) return out;
  const auto& rng = j["rng"];
  if (rng.value("kind", "") != "counter") out.push_back("rng.kind must be counter");
  if (!rng.contains("next_step") || rng["next_step"] != j["step"]) {
    out.push_back("rng.next_step must equal step");
  }
  if (j["params"].value("layout", "") != "toy_linear_v1") {
    out.push_back("unknown params.layout");
  }
  for (const auto& d : j["diagnostics_tail"]) {
    for (auto& e : validate_diagnostics_line(d)) out.push_back("tail: " + e);
  }
  return out;
}

Errors validate_score_request(const nlohmann::json& j) {
  const auto r = handle_score(j);
  if (r.status == 200) return {};
  return {r.body.value("error", std::string("invalid request"))};
}

Errors validate_score_response(const nlohmann::json& j) {
  if (!j.is_object()) return {"response must be an object"};
  Errors out;
  for (const char* k :
       {"format", "metrics", "total", "weight_format", "weight_metrics"}) {
    need_number(j, k, out);
  }
  if (!out.empty()) return out;
  const auto f = j["format"];
  if (!f.is_number_integer() || (f.get<int>() != 0 && f.get<int>() != 1)) {
    out.push_back("format must be 0 or 1");
  }
  const double m = j["metrics"].get<double>();
  if (m < 0.0 || m > 1.0) out.push_back("metrics must lie in [0, 1]");
  const double expect = j["weight_format"].get<double>() * j["format"].get<double>() +
                        j["weight_metrics"].get<double>() * m;
  if (std::abs(expect - j["total"].get<double>()) > 1e-12 * (1.0 + std::abs(expect))) {
    out.push_back("total must equal the weighted sum");
  }
  return out;
}

}  // namespace georft::schema
