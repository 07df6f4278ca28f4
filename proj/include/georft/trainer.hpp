#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "georft/checkpoint.hpp"
#include "georft/evalkit.hpp"
#include "georft/records.hpp"
#include "georft/run_config.hpp"
#include "georft/toy_policy.hpp"

namespace georft {

std::vector<QueryContext> contexts_from_records(
    const std::vector<SceneRecord>& records, std::size_t subset_cap = 12);

struct EvalOptions {
  std::vector<double> taus = {0.5, 0.7};
  // Drop unparseable answers instead of counting them as misses.
  bool drop_unparseable = false;
};

/// Greedy-decoding evaluation. Ties in the argmax are averaged over, so a
/// zero-parameter policy scores exactly the uniform-candidate expectation.
/// All contexts must share one task. Reports carry "mean_reward" (mean
/// metrics reward) in every table plus the task metric: Acc@tau and
/// mean_iou for REC, "map" for OVD, "giou" for GRES. Dataset-level OVD
/// mAP pools boxes across images, so it uses the first tied candidate.
EvalReport evaluate_policy(const ToyPolicy& policy,
                           std::span<const QueryContext> contexts,
                           const EvalOptions& options = {});

struct DataSource {
  std::string name;
  std::span<const QueryContext> contexts;
};

/// Zero-shot evaluation of a policy trained on `train` against `eval`; the
/// report is tagged with both source names.
EvalReport cross_eval(const DataSource& train, const DataSource& eval,
                      const ToyPolicy& policy, const EvalOptions& options = {});

struct TrainResult {
  std::size_t steps_run = 0;
  bool early_stopped = false;
  std::vector<nlohmann::json> diagnostics;
  std::vector<nlohmann::json> evals;
};

/// GRPO / DAPO / SFT loop over the toy policy. All randomness in step s is
/// derived from (seed, s), so a restored checkpoint continues bit-exactly.
class Trainer {
 public:
  Trainer(RunConfig config, std::vector<QueryContext> train,
          std::vector<QueryContext> eval = {});

  /// One update. Returns its diagnostics line.
  nlohmann::json step();

  /// Steps until config.steps or early stopping. Each diagnostics line is
  /// passed to sink; checkpoints and evals follow the configured cadence.
  TrainResult run(const std::function<void(const nlohmann::json&)>& sink = {});

  bool converged() const;

  Checkpoint checkpoint() const;
  void restore(const Checkpoint& checkpoint);

  const ToyPolicy& policy() const { return policy_; }
  std::size_t current_step() const { return step_; }
  const RunConfig& config() const { return config_; }
  std::span<const QueryContext> train_contexts() const { return train_; }

 private:
  std::vector<std::size_t> draw_batch(std::mt19937_64& rng) const;
  nlohmann::json grpo_step(std::uint64_t step_seed,
                           const std::vector<std::size_t>& batch);
  nlohmann::json sft_step_batch(std::uint64_t step_seed,
                                const std::vector<std::size_t>& batch);
  std::vector<Group> rollout(std::uint64_t step_seed,
                             const std::vector<std::size_t>& batch) const;

  RunConfig config_;
  std::vector<QueryContext> train_;
  std::vector<QueryContext> eval_;
  ToyPolicy policy_;
  std::vector<double> ref_params_;
  std::size_t step_ = 0;
  std::vector<double> reward_history_;
  std::vector<nlohmann::json> tail_;
};

}  // namespace georft
