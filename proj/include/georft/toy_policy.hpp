#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "georft/grpo.hpp"
#include "georft/toy_env.hpp"

namespace georft {

/// A query together with its enumerated answer space and feature matrix.
struct QueryContext {
  Scene scene;
  Example example;
  std::vector<Candidate> candidates;
  // Row-major, candidates.size() x kFeatureDim.
  std::vector<double> features;
  std::optional<std::size_t> gt_candidate;

  std::size_t size() const { return candidates.size(); }
  std::span<const double> feature_row(std::size_t c) const;
};

QueryContext build_context(Scene scene, Example example,
                           std::size_t subset_cap = 12);

/// Linear softmax policy over a query's candidate set:
/// pi(c) = softmax(params . phi(c) / temperature).
class ToyPolicy {
 public:
  explicit ToyPolicy(double temperature = 1.0);
  ToyPolicy(std::vector<double> params, double temperature);

  const std::vector<double>& params() const { return params_; }
  void set_params(std::span<const double> params);
  double temperature() const { return temperature_; }

  std::vector<double> log_probs(const QueryContext& ctx,
                                Execution exec = Execution::kSerial) const;

  /// log pi(candidate); adds scale * d/dparams into grad when non-empty.
  /// Throws std::out_of_range for an index outside the candidate set.
  double log_prob(const QueryContext& ctx, std::size_t candidate,
                  std::span<double> grad = {}, double scale = 1.0) const;

  std::size_t sample(const QueryContext& ctx, std::mt19937_64& rng) const;

  /// Every candidate attaining the maximal score (ties within 1e-12).
  std::vector<std::size_t> greedy(const QueryContext& ctx) const;

  /// Exact KL(this || reference) with scale * gradient added into grad.
  double exact_kl(const QueryContext& ctx, std::span<const double> ref_params,
                  std::span<double> grad = {}, double scale = 1.0) const;

 private:
  std::vector<double> params_;
  double temperature_;
};

/// Templated rationale for a candidate.
std::string rationale(const QueryContext& ctx, std::size_t candidate);

/// Rationale and emitted answer in canonical tags.
std::string render_completion(const QueryContext& ctx, std::size_t candidate);

/// Breaks the tag structure of a completion in one of several ways chosen
/// by `kind` (any integer); the result never has a valid format.
std::string corrupt_completion(const std::string& completion, std::uint64_t kind);

struct SampledCompletion {
  std::size_t candidate = 0;
  std::string text;
  bool corrupted = false;
};

/// Draws a candidate from the policy and renders it; with probability
/// fault_rate the tags are corrupted.
SampledCompletion policy_sample(const ToyPolicy& policy,
                                const QueryContext& ctx, std::uint64_t seed,
                                double fault_rate = 0.0);

/// One maximum-likelihood ascent step on log pi(gt candidate). Returns the
/// log-likelihood before the step.
double sft_step(ToyPolicy& policy, const QueryContext& ctx,
                double learning_rate);

/// Adapts a ToyPolicy over a fixed list of contexts (query_id = index) to the
/// optimizer interface.
class ToyPolicyModel final : public PolicyModel {
 public:
  ToyPolicyModel(ToyPolicy& policy, std::span<const QueryContext> contexts)
      : policy_(policy), contexts_(contexts) {}

  std::size_t num_params() const override { return kFeatureDim; }
  std::vector<double> parameters() const override { return policy_.params(); }
  void set_parameters(std::span<const double> params) override {
    policy_.set_params(params);
  }
  double log_prob(std::size_t query_id, std::size_t candidate,
                  std::span<double> grad, double scale) const override;
  double exact_kl(std::size_t query_id, std::span<const double> ref_params,
                  std::span<double> grad, double scale) const override;

 private:
  ToyPolicy& policy_;
  std::span<const QueryContext> contexts_;
};

}  // namespace georft
