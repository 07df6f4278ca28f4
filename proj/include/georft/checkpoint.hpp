#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace georft {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;

/// Everything needed to resume training bit-exactly. Randomness is a pure
/// function of (seed, step), so the generator state is that pair.
struct Checkpoint {
  int format_version = kCheckpointVersion;
  std::size_t step = 0;
  std::string task;
  std::string variant;
  std::vector<double> params;
  std::vector<double> ref_params;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<double> reward_history;
  std::vector<nlohmann::json> diagnostics_tail;

  nlohmann::json to_json() const;
  static Checkpoint from_json(const nlohmann::json& j);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace georft
