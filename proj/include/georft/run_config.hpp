#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "georft/grpo.hpp"
#include "georft/rewards.hpp"

namespace georft {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class TrainVariant { kGrpo, kDapo, kSft };

std::string_view train_variant_name(TrainVariant v);

struct EarlyStopConfig {
  bool enabled = true;
  // Stop once mean reward over the last `window` steps beats the window
  // before it by less than min_delta.
  std::size_t window = 200;
  double min_delta = 1e-3;
};

struct RunConfig {
  TrainVariant variant = TrainVariant::kGrpo;
  GrpoConfig grpo;
  RewardWeights weights;
  FormatCheck format_check = FormatCheck::kStrict;
  double temperature = 1.0;
  double fault_rate = 0.0;
  std::size_t subset_cap = 12;

  std::string train_dataset;
  std::string eval_dataset;
  // Few-shot K applied to the training set; 0 keeps every record.
  std::size_t shots = 0;
  std::uint64_t seed = 0;

  std::size_t steps = 1000;
  std::size_t queries_per_step = 8;
  // Gradient steps per batch of rollouts (> 1 exercises the clip).
  std::size_t inner_steps = 1;
  std::size_t eval_every = 0;
  std::size_t checkpoint_every = 0;
  std::string checkpoint_dir;
  std::string diagnostics_path;
  EarlyStopConfig early_stop;

  nlohmann::json to_json() const;
  /// Missing keys take defaults; unknown keys and invalid values throw
  /// ConfigError. Relative dataset paths resolve against base_dir.
  static RunConfig from_json(const nlohmann::json& j,
                             const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);

  void validate() const;

  /// Hex digest of the canonical JSON (independent of key order).
  std::string digest() const;
};

}  // namespace georft
