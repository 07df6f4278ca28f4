#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace georft::schema {

// Each validator returns the list of problems found; empty means valid.

using Errors = std::vector<std::string>;

Errors validate_rle(const nlohmann::json& j);
Errors validate_record(const nlohmann::json& j);
Errors validate_eval_report(const nlohmann::json& j);
Errors validate_diagnostics_line(const nlohmann::json& j);
Errors validate_checkpoint(const nlohmann::json& j);
Errors validate_score_request(const nlohmann::json& j);
Errors validate_score_response(const nlohmann::json& j);

}  // namespace georft::schema
