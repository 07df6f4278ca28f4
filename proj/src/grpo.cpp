#include "georft/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace georft {

GrpoConfig GrpoConfig::dapo() {
  GrpoConfig cfg;
  cfg.variant = Variant::kDapo;
  cfg.clip_eps_low = 0.2;
  cfg.clip_eps_high = 0.28;
  cfg.kl_beta = 0.0;
  return cfg;
}

void GrpoConfig::validate() const {
  if (group_size < 2) throw GrpoError("group_size must be >= 2");
  if (!(clip_eps_low > 0.0)) throw GrpoError("clip_eps_low must be > 0");
  if (!(clip_eps_high >= clip_eps_low)) {
    throw GrpoError("clip_eps_high must be >= clip_eps_low");
  }
  if (!(kl_beta >= 0.0)) throw GrpoError("kl_beta must be >= 0");
  if (!(std_epsilon > 0.0)) throw GrpoError("std_epsilon must be > 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw GrpoError("learning_rate must be finite and >= 0");
  }
}

std::vector<double> Group::rewards() const {
  std::vector<double> r;
  r.reserve(rollouts.size());
  for (const auto& ro : rollouts) r.push_back(ro.reward);
  return r;
}

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n);
}

std::vector<double> compute_advantages(std::span<const double> rewards,
                                       const GrpoConfig& cfg) {
  if (rewards.size() < 2) {
    throw GrpoError("a group needs at least two rollouts");
  }
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  const double denom = population_std(rewards) + cfg.std_epsilon;
  std::vector<double> adv(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    adv[i] = (rewards[i] - mean) / denom;
  }
  return adv;
}

std::vector<double> compute_advantages(const Group& group,
                                       const GrpoConfig& cfg) {
  const auto r = group.rewards();
  return compute_advantages(r, cfg);
}

double kl_k3(double logp_current, double logp_ref) {
  // x - log x - 1 with log x = d, written as expm1(d) - d for accuracy.
  const double d = logp_ref - logp_current;
  return std::max(0.0, std::expm1(d) - d);
}

double kl_k3_grad(double logp_current, double logp_ref) {
  return -std::expm1(logp_ref - logp_current);
}

double kl_divergence(const Rollout& rollout) {
  return kl_k3(rollout.logp_current, rollout.logp_ref);
}

double exact_kl(std::span<const double> logp_current,
                std::span<const double> logp_ref) {
  double kl = 0.0;
  for (std::size_t i = 0; i < logp_current.size(); ++i) {
    const double p = std::exp(logp_current[i]);
    if (p > 0.0) kl += p * (logp_current[i] - logp_ref[i]);
  }
  return std::max(0.0, kl);
}

ClippedTerm clipped_term(double logp_current, double logp_old,
                         double advantage, const GrpoConfig& cfg) {
  const double eps_high =
      cfg.variant == Variant::kGrpo ? cfg.clip_eps_low : cfg.clip_eps_high;
  const double ratio = std::exp(logp_current - logp_old);
  const double bounded =
      std::clamp(ratio, 1.0 - cfg.clip_eps_low, 1.0 + eps_high);
  const double unclipped = ratio * advantage;
  const double clipped = bounded * advantage;
  ClippedTerm t;
  if (unclipped <= clipped) {
    t.value = unclipped;
    t.dlogp = unclipped;  // d(ratio)/d(logp) = ratio
  } else {
    t.value = clipped;
    t.dlogp = 0.0;
    t.clipped = true;
  }
  return t;
}

double surrogate_objective(const Group& group, const GrpoConfig& cfg) {
  if (group.advantages.size() != group.rollouts.size()) {
    throw GrpoError("surrogate_objective needs one advantage per rollout");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
    const auto& r = group.rollouts[i];
    sum += clipped_term(r.logp_current, r.logp_old, group.advantages[i], cfg)
               .value -
           cfg.kl_beta * kl_divergence(r);
  }
  return sum / static_cast<double>(group.rollouts.size());
}

namespace {

struct GroupResult {
  std::vector<double> grad;
  double objective = 0.0;
  double kl_sum = 0.0;
  double reward_sum = 0.0;
  std::size_t clipped = 0;
  std::size_t rollouts = 0;
};

GroupResult group_gradient(Group& group, const PolicyModel& policy,
                           std::span<const double> ref_params,
                           const GrpoConfig& cfg) {
  GroupResult res;
  res.grad.assign(policy.num_params(), 0.0);
  if (group.advantages.size() != group.rollouts.size()) {
    group.advantages = compute_advantages(group, cfg);
  }
  const double inv_n = 1.0 / static_cast<double>(group.rollouts.size());
  for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
    auto& r = group.rollouts[i];
    r.logp_current = policy.log_prob(group.query_id, r.candidate, {}, 0.0);
    const auto term =
        clipped_term(r.logp_current, r.logp_old, group.advantages[i], cfg);
    double coef = term.dlogp;
    res.objective += term.value * inv_n;
    if (cfg.kl_mode == KlMode::kEstimator) {
      const double kl = kl_k3(r.logp_current, r.logp_ref);
      res.objective -= cfg.kl_beta * kl * inv_n;
      res.kl_sum += kl;
      coef -= cfg.kl_beta * kl_k3_grad(r.logp_current, r.logp_ref);
    }
    if (coef != 0.0) {
      policy.log_prob(group.query_id, r.candidate, res.grad, coef * inv_n);
    }
    res.clipped += term.clipped ? 1 : 0;
    res.reward_sum += r.reward;
  }
  if (cfg.kl_mode == KlMode::kExact) {
    // Every rollout carries the same exact KL, so the mean is just that KL.
    const double kl =
        policy.exact_kl(group.query_id, ref_params,
                        cfg.kl_beta != 0.0 ? std::span<double>(res.grad)
                                           : std::span<double>(),
                        -cfg.kl_beta);
    res.objective -= cfg.kl_beta * kl;
    res.kl_sum += kl * static_cast<double>(group.rollouts.size());
  }
  res.rollouts = group.rollouts.size();
  return res;
}

}  // namespace

double surrogate_gradient(std::span<Group> groups, const PolicyModel& policy,
                          std::span<const double> ref_params,
                          const GrpoConfig& cfg, std::span<double> grad,
                          StepDiagnostics* diagnostics, Execution exec) {
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<GroupResult> results(groups.size());
  for_each_index(
      groups.size(),
      [&](std::size_t g) {
        results[g] = group_gradient(groups[g], policy, ref_params, cfg);
      },
      exec);

  double objective = 0.0, kl_sum = 0.0, reward_sum = 0.0;
  std::size_t clipped = 0, rollouts = 0;
  std::vector<std::vector<double>> parts;
  parts.reserve(results.size());
  for (auto& r : results) {
    objective += r.objective;
    kl_sum += r.kl_sum;
    reward_sum += r.reward_sum;
    clipped += r.clipped;
    rollouts += r.rollouts;
    parts.push_back(std::move(r.grad));
  }
  kernels::ordered_sum(parts, grad);
  if (!groups.empty()) {
    const double inv_g = 1.0 / static_cast<double>(groups.size());
    objective *= inv_g;
    for (double& g : grad) g *= inv_g;
  }
  if (diagnostics != nullptr) {
    diagnostics->objective = objective;
    if (rollouts > 0) {
      const double n = static_cast<double>(rollouts);
      diagnostics->mean_kl = kl_sum / n;
      diagnostics->mean_reward = reward_sum / n;
      diagnostics->clip_frac = static_cast<double>(clipped) / n;
    }
  }
  return objective;
}

std::vector<Group> dapo_filter(std::vector<Group> groups, double std_epsilon,
                               std::size_t* filtered) {
  std::vector<Group> kept;
  kept.reserve(groups.size());
  for (auto& g : groups) {
    const auto r = g.rewards();
    if (population_std(r) >= std_epsilon) kept.push_back(std::move(g));
  }
  if (filtered != nullptr) *filtered = groups.size() - kept.size();
  return kept;
}

StepDiagnostics policy_step(std::vector<Group>& groups, PolicyModel& policy,
                            std::span<const double> ref_params,
                            const GrpoConfig& cfg, Execution exec) {
  cfg.validate();
  StepDiagnostics diag;
  double reward_sum = 0.0;
  std::size_t rollouts = 0;
  for (const auto& g : groups) {
    for (const auto& r : g.rollouts) reward_sum += r.reward;
    rollouts += g.rollouts.size();
  }
  if (cfg.variant == Variant::kDapo) {
    groups = dapo_filter(std::move(groups), cfg.std_epsilon,
                         &diag.filtered_groups);
  }
  std::vector<double> grad(policy.num_params(), 0.0);
  surrogate_gradient(groups, policy, ref_params, cfg, grad, &diag, exec);
  diag.mean_reward =
      rollouts > 0 ? reward_sum / static_cast<double>(rollouts) : 0.0;

  double norm2 = 0.0;
  for (double g : grad) norm2 += g * g;
  diag.grad_norm = std::sqrt(norm2);
  if (!std::isfinite(diag.grad_norm) || !std::isfinite(diag.objective)) {
    diag.error = "non-finite gradient or objective; step skipped";
    return diag;
  }
  if (cfg.learning_rate != 0.0 && !groups.empty()) {
    auto params = policy.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) {
      params[k] += cfg.learning_rate * grad[k];
    }
    policy.set_parameters(params);
  }
  diag.applied = true;
  return diag;
}

nlohmann::json diagnostics_json(std::size_t step, const StepDiagnostics& d) {
  return {{"step", step},
          {"objective", d.objective},
          {"mean_reward", d.mean_reward},
          {"mean_kl", d.mean_kl},
          {"clip_frac", d.clip_frac},
          {"filtered_groups", d.filtered_groups}};
}

}  // namespace georft
