#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "georft/kernels.hpp"

namespace georft {

enum class Variant { kGrpo, kDapo };
enum class KlMode { kEstimator, kExact };

class GrpoError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GrpoConfig {
  std::size_t group_size = 8;
  double clip_eps_low = 0.2;
  double clip_eps_high = 0.2;
  double kl_beta = 0.04;
  double std_epsilon = 1e-6;
  double learning_rate = 0.05;
  Variant variant = Variant::kGrpo;
  KlMode kl_mode = KlMode::kEstimator;

  /// Asymmetric clipping, no KL term, uniform-group filtering.
  static GrpoConfig dapo();

  /// Throws GrpoError on out-of-range values.
  void validate() const;
};

/// One sampled completion for a query. Log-probabilities are sequence-level
/// (nats) under the current, behaviour (old) and reference policies.
struct Rollout {
  std::string completion;
  std::size_t candidate = 0;
  double logp_current = 0.0;
  double logp_old = 0.0;
  double logp_ref = 0.0;
  double reward = 0.0;
};

struct Group {
  std::size_t query_id = 0;
  std::vector<Rollout> rollouts;
  std::vector<double> advantages;

  std::vector<double> rewards() const;
};

/// (r_i - mean) / (population std + std_epsilon). Throws GrpoError for
/// fewer than two rewards.
std::vector<double> compute_advantages(std::span<const double> rewards,
                                       const GrpoConfig& cfg);
std::vector<double> compute_advantages(const Group& group,
                                       const GrpoConfig& cfg);

double population_std(std::span<const double> values);

/// k3 estimator x - log x - 1 with x = pi_ref / pi_theta; always >= 0.
double kl_k3(double logp_current, double logp_ref);

/// d kl_k3 / d logp_current.
double kl_k3_grad(double logp_current, double logp_ref);

/// Estimator-mode KL of a single rollout.
double kl_divergence(const Rollout& rollout);

/// Exact KL(pi || pi_ref) from full log-probability tables over an
/// enumerable outcome space.
double exact_kl(std::span<const double> logp_current,
                std::span<const double> logp_ref);

/// Clipped term for one rollout, without the KL part.
struct ClippedTerm {
  double value = 0.0;
  // d value / d logp_current.
  double dlogp = 0.0;
  // True when the clipped branch is selected and strictly below the
  // unclipped one (zero gradient).
  bool clipped = false;
};

ClippedTerm clipped_term(double logp_current, double logp_old, double advantage,
                         const GrpoConfig& cfg);

/// (1/N) sum_i [min(c1 A_i, c2 A_i) - beta KL_i] using the stored
/// log-probabilities (estimator KL). Requires advantages.
double surrogate_objective(const Group& group, const GrpoConfig& cfg);

/// A policy the optimizer can differentiate: sequence log-probabilities of
/// candidates for a query, with parameter gradients.
class PolicyModel {
 public:
  virtual ~PolicyModel() = default;

  virtual std::size_t num_params() const = 0;
  virtual std::vector<double> parameters() const = 0;
  virtual void set_parameters(std::span<const double> params) = 0;

  /// log pi(candidate | query); adds scale * gradient into grad when grad is
  /// non-empty.
  virtual double log_prob(std::size_t query_id, std::size_t candidate,
                          std::span<double> grad, double scale) const = 0;

  /// Exact KL(pi_theta || pi_ref) over the query's outcome space, with
  /// scale * gradient added into grad when non-empty.
  virtual double exact_kl(std::size_t query_id,
                          std::span<const double> ref_params,
                          std::span<double> grad, double scale) const = 0;
};

struct StepDiagnostics {
  double objective = 0.0;
  double mean_reward = 0.0;
  double mean_kl = 0.0;
  double clip_frac = 0.0;
  std::size_t filtered_groups = 0;
  double grad_norm = 0.0;
  bool applied = false;
  std::string error;
};

/// Surrogate objective averaged over groups and its gradient with respect to
/// the policy parameters. Refreshes every rollout's logp_current from the
/// policy and fills missing advantages. grad is overwritten.
double surrogate_gradient(std::span<Group> groups, const PolicyModel& policy,
                          std::span<const double> ref_params,
                          const GrpoConfig& cfg, std::span<double> grad,
                          StepDiagnostics* diagnostics = nullptr,
                          Execution exec = Execution::kParallel);

/// Drops groups whose reward std is below std_epsilon, preserving order.
std::vector<Group> dapo_filter(std::vector<Group> groups, double std_epsilon,
                               std::size_t* filtered = nullptr);

/// One gradient-ascent step on the surrogate. DAPO filters groups first.
/// A non-finite gradient leaves the parameters untouched and reports the
/// reason in diagnostics.error.
StepDiagnostics policy_step(std::vector<Group>& groups, PolicyModel& policy,
                            std::span<const double> ref_params,
                            const GrpoConfig& cfg,
                            Execution exec = Execution::kParallel);

nlohmann::json diagnostics_json(std::size_t step, const StepDiagnostics& d);

}  // namespace georft
