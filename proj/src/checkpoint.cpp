#include "georft/checkpoint.hpp"

#include <fstream>

#include "georft/toy_env.hpp"

namespace georft {

nlohmann::json Checkpoint::to_json() const {
  return {{"format_version", format_version},
          {"step", step},
          {"task", task},
          {"variant", variant},
          {"params",
           {{"dim", params.size()}, {"layout", "toy_linear_v1"}, {"values", params}}},
          {"ref_params", ref_params},
          {"temperature", temperature},
          {"rng", {{"kind", "counter"}, {"seed", seed}, {"next_step", step}}},
          {"config_digest", config_digest},
          {"reward_history", reward_history},
          {"diagnostics_tail", diagnostics_tail}};
}

Checkpoint Checkpoint::from_json(const nlohmann::json& j) {
  Checkpoint c;
  try {
    c.format_version = j.at("format_version").get<int>();
    if (c.format_version != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " +
                            std::to_string(c.format_version));
    }
    c.step = j.at("step").get<std::size_t>();
    c.task = j.at("task").get<std::string>();
    c.variant = j.at("variant").get<std::string>();
    const auto& p = j.at("params");
    c.params = p.at("values").get<std::vector<double>>();
    if (p.at("dim").get<std::size_t>() != c.params.size() ||
        c.params.size() != kFeatureDim) {
      throw CheckpointError("parameter dimension mismatch");
    }
    c.ref_params = j.at("ref_params").get<std::vector<double>>();
    if (c.ref_params.size() != c.params.size()) {
      throw CheckpointError("reference parameter dimension mismatch");
    }
    c.temperature = j.at("temperature").get<double>();
    c.seed = j.at("rng").at("seed").get<std::uint64_t>();
    c.config_digest = j.at("config_digest").get<std::string>();
    c.reward_history = j.at("reward_history").get<std::vector<double>>();
    for (const auto& d : j.at("diagnostics_tail")) c.diagnostics_tail.push_back(d);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace georft
