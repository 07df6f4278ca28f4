#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "georft/rewards.hpp"

namespace httplib {
class Server;
}

namespace georft {

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

/// Scores one completion.
///
/// Request:
///   {"task": "rec"|"ovd"|"gres", "completion": "...",
///    "ground_truth": {"width": W, "height": H,
///                     "targets": [{"bbox": [..], "label"?: "..",
///                                  "mask"?: {"size": [H, W], "counts": [..]}}]},
///    "scene"?: {...},            // required for gres
///    "weights"?: {"format": 1, "metrics": 1},
///    "format_check"?: "strict"|"tags_only"}
///
/// A malformed request is a 400 with {"error": reason}. A malformed
/// completion is not an error: it is scored (format 0, metrics 0).
ServiceResponse handle_score(const nlohmann::json& request);

/// Same, starting from the raw request body.
ServiceResponse handle_score_text(const std::string& body);

nlohmann::json breakdown_json(const RewardBreakdown& r);

/// Request body for a completion scored against `gt`. scene is required
/// for GRES and optional otherwise.
nlohmann::json make_score_request(std::string_view completion,
                                  const GroundTruth& gt,
                                  const Scene* scene = nullptr,
                                  const RewardWeights& weights = {});

/// HTTP front end: POST /v1/score, GET /v1/health.
class ScoreServer {
 public:
  ScoreServer();
  ~ScoreServer();
  ScoreServer(const ScoreServer&) = delete;
  ScoreServer& operator=(const ScoreServer&) = delete;

  /// Binds host:port (port 0 picks a free one) and returns the bound port,
  /// or -1 on failure.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool listen();
  void stop();

 private:
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace georft
