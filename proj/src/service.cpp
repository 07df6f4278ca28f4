#include "georft/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <stdexcept>

namespace georft {

namespace {

class BadRequest : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) {
    throw BadRequest(std::string("missing field \"") + key + "\"");
  }
  return j[key];
}

GroundTruth parse_ground_truth(Task task, const nlohmann::json& j) {
  if (!j.is_object()) throw BadRequest("ground_truth must be an object");
  GroundTruth gt;
  gt.task = task;
  const auto& w = field(j, "width");
  const auto& h = field(j, "height");
  if (!w.is_number_integer() || !h.is_number_integer()) {
    throw BadRequest("ground_truth width/height must be integers");
  }
  gt.width = w.get<int>();
  gt.height = h.get<int>();
  if (gt.width <= 0 || gt.height <= 0) {
    throw BadRequest("ground_truth canvas must be positive");
  }
  const auto& targets = field(j, "targets");
  if (!targets.is_array()) throw BadRequest("targets must be an array");
  for (const auto& t : targets) {
    if (!t.is_object()) throw BadRequest("each target must be an object");
    const BBox box = box_from_json(field(t, "bbox"));
    switch (task) {
      case Task::kRec:
        gt.rec_box = box;
        break;
      case Task::kOvd: {
        const auto& label = field(t, "label");
        if (!label.is_string()) throw BadRequest("label must be a string");
        gt.ovd_items.push_back({box, label.get<std::string>()});
        break;
      }
      case Task::kGres: {
        auto mask = BinaryMask::from_json(field(t, "mask"));
        if (mask.width() != gt.width || mask.height() != gt.height) {
          throw BadRequest("target mask size differs from the canvas");
        }
        gt.gres_masks.push_back(std::move(mask));
        break;
      }
    }
  }
  if (task == Task::kRec && targets.size() != 1) {
    throw BadRequest("rec ground truth needs exactly one target");
  }
  return gt;
}

// Tight pixel bounds; scoring itself only uses the mask.
BBox mask_bounds(const BinaryMask& m) {
  const auto bits = m.to_bitmap();
  int r0 = m.height(), r1 = 0, c0 = m.width(), c1 = 0;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (!bits[static_cast<std::size_t>(r) * m.width() + c]) continue;
      r0 = std::min(r0, r);
      r1 = std::max(r1, r + 1);
      c0 = std::min(c0, c);
      c1 = std::max(c1, c + 1);
    }
  }
  if (r1 == 0) return {0, 0, 0, 0};
  return {double(c0), double(r0), double(c1), double(r1)};
}

}  // namespace

nlohmann::json breakdown_json(const RewardBreakdown& r) {
  return {{"format", r.format},
          {"metrics", r.metrics},
          {"total", r.total},
          {"weight_format", r.weight_format},
          {"weight_metrics", r.weight_metrics}};
}

nlohmann::json make_score_request(std::string_view completion,
                                  const GroundTruth& gt, const Scene* scene,
                                  const RewardWeights& weights) {
  nlohmann::json targets = nlohmann::json::array();
  switch (gt.task) {
    case Task::kRec:
      if (gt.rec_box) targets.push_back({{"bbox", box_to_json(*gt.rec_box)}});
      break;
    case Task::kOvd:
      for (const auto& item : gt.ovd_items) {
        targets.push_back({{"bbox", box_to_json(item.box)}, {"label", item.label}});
      }
      break;
    case Task::kGres:
      for (const auto& m : gt.gres_masks) {
        targets.push_back({{"bbox", box_to_json(mask_bounds(m))},
                           {"mask", m.to_json()}});
      }
      break;
  }
  nlohmann::json request = {
      {"task", task_name(gt.task)},
      {"completion", completion},
      {"ground_truth",
       {{"width", gt.width}, {"height", gt.height}, {"targets", targets}}},
      {"weights", {{"format", weights.format}, {"metrics", weights.metrics}}}};
  if (scene) request["scene"] = scene->to_json();
  return request;
}

ServiceResponse handle_score(const nlohmann::json& request) {
  try {
    if (!request.is_object()) throw BadRequest("request must be an object");
    const auto& task_field = field(request, "task");
    if (!task_field.is_string()) throw BadRequest("task must be a string");
    const auto task = parse_task(task_field.get<std::string>());
    if (!task) throw BadRequest("task must be rec, ovd or gres");
    const auto& completion = field(request, "completion");
    if (!completion.is_string()) throw BadRequest("completion must be a string");
    const auto gt = parse_ground_truth(*task, field(request, "ground_truth"));

    RewardWeights weights;
    if (request.contains("weights")) {
      const auto& w = request["weights"];
      if (!w.is_object()) throw BadRequest("weights must be an object");
      weights.format = w.value("format", 1.0);
      weights.metrics = w.value("metrics", 1.0);
    }
    FormatCheck check = FormatCheck::kStrict;
    if (request.contains("format_check")) {
      const auto c = request["format_check"].get<std::string>();
      if (c == "tags_only") {
        check = FormatCheck::kTagsOnly;
      } else if (c != "strict") {
        throw BadRequest("format_check must be strict or tags_only");
      }
    }
    std::optional<Scene> scene;
    if (request.contains("scene")) {
      scene = Scene::from_json(request["scene"]);
      if (scene->width != gt.width || scene->height != gt.height) {
        throw BadRequest("scene canvas differs from ground_truth");
      }
    }
    if (*task == Task::kGres && !scene) {
      throw BadRequest("gres scoring needs \"scene\"");
    }
    static const ToySegmenter kSegmenter;
    const auto r = score_completion(completion.get<std::string>(), gt,
                                    scene ? &*scene : nullptr, &kSegmenter,
                                    weights, check);
    return {200, breakdown_json(r)};
  } catch (const BadRequest& e) {
    return {400, {{"error", e.what()}}};
  } catch (const nlohmann::json::exception& e) {
    return {400, {{"error", e.what()}}};
  } catch (const std::invalid_argument& e) {
    return {400, {{"error", e.what()}}};
  }
}

ServiceResponse handle_score_text(const std::string& body) {
  nlohmann::json request;
  try {
    request = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    return {400, {{"error", std::string("request is not JSON: ") + e.what()}}};
  }
  return handle_score(request);
}

ScoreServer::ScoreServer() : server_(std::make_unique<httplib::Server>()) {
  server_->Post("/v1/score",
                [](const httplib::Request& req, httplib::Response& res) {
                  const auto r = handle_score_text(req.body);
                  res.status = r.status;
                  res.set_content(r.body.dump(), "application/json");
                });
  server_->Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
}

ScoreServer::~ScoreServer() = default;

int ScoreServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host.c_str());
  return server_->bind_to_port(host.c_str(), port) ? port : -1;
}

bool ScoreServer::listen() { return server_->listen_after_bind(); }

void ScoreServer::stop() { server_->stop(); }

}  // namespace georft
