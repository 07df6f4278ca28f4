#include "georft/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "georft/util.hpp"

namespace georft {

namespace {

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -INFINITY;
  const double m = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Expected feature vector under probabilities p.
std::vector<double> expected_features(const QueryContext& ctx,
                                      std::span<const double> p) {
  std::vector<double> mean(kFeatureDim, 0.0);
  for (std::size_t c = 0; c < ctx.size(); ++c) {
    const auto row = ctx.feature_row(c);
    for (std::size_t k = 0; k < kFeatureDim; ++k) mean[k] += p[c] * row[k];
  }
  return mean;
}

}  // namespace

std::span<const double> QueryContext::feature_row(std::size_t c) const {
  return std::span<const double>(features).subspan(c * kFeatureDim,
                                                   kFeatureDim);
}

QueryContext build_context(Scene scene, Example example,
                           std::size_t subset_cap) {
  QueryContext ctx;
  ctx.candidates = candidates(scene, example.query, subset_cap);
  ctx.features.reserve(ctx.candidates.size() * kFeatureDim);
  for (const auto& c : ctx.candidates) {
    const auto f = candidate_features(scene, example.query, c);
    ctx.features.insert(ctx.features.end(), f.begin(), f.end());
  }
  ctx.gt_candidate = ground_truth_candidate(ctx.candidates, example);
  ctx.scene = std::move(scene);
  ctx.example = std::move(example);
  return ctx;
}

ToyPolicy::ToyPolicy(double temperature)
    : params_(kFeatureDim, 0.0), temperature_(temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("temperature must be > 0");
  }
}

ToyPolicy::ToyPolicy(std::vector<double> params, double temperature)
    : ToyPolicy(temperature) {
  set_params(params);
}

void ToyPolicy::set_params(std::span<const double> params) {
  if (params.size() != kFeatureDim) {
    throw std::invalid_argument("expected " + std::to_string(kFeatureDim) +
                                " parameters, got " +
                                std::to_string(params.size()));
  }
  params_.assign(params.begin(), params.end());
}

std::vector<double> ToyPolicy::log_probs(const QueryContext& ctx,
                                         Execution exec) const {
  auto scores =
      kernels::linear_scores(ctx.features, params_, temperature_, exec);
  const double z = log_sum_exp(scores);
  for (double& s : scores) s -= z;
  return scores;
}

double ToyPolicy::log_prob(const QueryContext& ctx, std::size_t candidate,
                           std::span<double> grad, double scale) const {
  if (candidate >= ctx.size()) {
    throw std::out_of_range("candidate " + std::to_string(candidate) +
                            " outside a set of " + std::to_string(ctx.size()));
  }
  const auto lp = log_probs(ctx);
  if (!grad.empty() && scale != 0.0) {
    std::vector<double> p(lp.size());
    for (std::size_t c = 0; c < lp.size(); ++c) p[c] = std::exp(lp[c]);
    const auto mean = expected_features(ctx, p);
    const auto row = ctx.feature_row(candidate);
    for (std::size_t k = 0; k < kFeatureDim; ++k) {
      grad[k] += scale * (row[k] - mean[k]) / temperature_;
    }
  }
  return lp[candidate];
}

std::size_t ToyPolicy::sample(const QueryContext& ctx,
                              std::mt19937_64& rng) const {
  const auto lp = log_probs(ctx);
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t c = 0; c < lp.size(); ++c) {
    acc += std::exp(lp[c]);
    if (u < acc) return c;
  }
  return lp.size() - 1;
}

std::vector<std::size_t> ToyPolicy::greedy(const QueryContext& ctx) const {
  const auto scores =
      kernels::linear_scores(ctx.features, params_, temperature_,
                             Execution::kSerial);
  std::vector<std::size_t> best;
  if (scores.empty()) return best;
  const double top = *std::max_element(scores.begin(), scores.end());
  const double tol = 1e-12 * std::max(1.0, std::fabs(top));
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (scores[c] >= top - tol) best.push_back(c);
  }
  return best;
}

double ToyPolicy::exact_kl(const QueryContext& ctx,
                           std::span<const double> ref_params,
                           std::span<double> grad, double scale) const {
  const auto lp = log_probs(ctx);
  const ToyPolicy ref(std::vector<double>(ref_params.begin(), ref_params.end()),
                      temperature_);
  const auto lr = ref.log_probs(ctx);
  const double kl = georft::exact_kl(lp, lr);
  if (!grad.empty() && scale != 0.0) {
    // d KL = sum_c p_c (lp_c - lr_c) (phi_c - E phi) / T
    std::vector<double> p(lp.size());
    for (std::size_t c = 0; c < lp.size(); ++c) p[c] = std::exp(lp[c]);
    const auto mean = expected_features(ctx, p);
    for (std::size_t c = 0; c < lp.size(); ++c) {
      const double w = p[c] * (lp[c] - lr[c]);
      if (w == 0.0) continue;
      const auto row = ctx.feature_row(c);
      for (std::size_t k = 0; k < kFeatureDim; ++k) {
        grad[k] += scale * w * (row[k] - mean[k]) / temperature_;
      }
    }
  }
  return kl;
}

std::string rationale(const QueryContext& ctx, std::size_t candidate) {
  const auto& q = ctx.example.query;
  const auto& cand = ctx.candidates[candidate];
  std::string text = "The query asks for " + q.text + ". ";
  if (q.task == Task::kRec) {
    text += "Selecting the " + std::string(relation_name(q.relation)) + " " +
            q.category + " among " + std::to_string(ctx.scene.objects.size()) +
            " objects.";
  } else if (cand.objects.empty()) {
    text += "No matching objects are visible.";
  } else {
    text += "Selecting " + std::to_string(cand.objects.size()) +
            " matching object" + (cand.objects.size() == 1 ? "" : "s") + ".";
  }
  return text;
}

std::string render_completion(const QueryContext& ctx, std::size_t candidate) {
  return wrap_completion(rationale(ctx, candidate),
                         emit(ctx.candidates[candidate].answer));
}

std::string corrupt_completion(const std::string& completion,
                               std::uint64_t kind) {
  const auto erase_all = [](std::string s, std::string_view tag) {
    for (auto pos = s.find(tag); pos != std::string::npos; pos = s.find(tag)) {
      s.erase(pos, tag.size());
    }
    return s;
  };
  switch (kind % 4) {
    case 0:  // dropped closing answer tag
      return erase_all(completion, "</answer>");
    case 1: {  // answer before think
      const auto split = completion.find("<answer>");
      if (split == std::string::npos) return "<answer></answer>" + completion;
      return completion.substr(split) + completion.substr(0, split);
    }
    case 2:  // duplicated think block
      return "<think>draft</think>" + completion;
    default:  // no tags at all
      return erase_all(erase_all(erase_all(erase_all(completion, "<think>"),
                                           "</think>"),
                                 "<answer>"),
                       "</answer>");
  }
}

SampledCompletion policy_sample(const ToyPolicy& policy,
                                const QueryContext& ctx, std::uint64_t seed,
                                double fault_rate) {
  std::mt19937_64 rng(seed);
  SampledCompletion out;
  out.candidate = policy.sample(ctx, rng);
  out.text = render_completion(ctx, out.candidate);
  if (fault_rate > 0.0 && uniform01(rng) < fault_rate) {
    out.text = corrupt_completion(out.text, rng());
    out.corrupted = true;
  }
  return out;
}

double sft_step(ToyPolicy& policy, const QueryContext& ctx,
                double learning_rate) {
  if (!ctx.gt_candidate) {
    throw std::invalid_argument("ground truth is not in the candidate set");
  }
  std::vector<double> grad(kFeatureDim, 0.0);
  const double ll = policy.log_prob(ctx, *ctx.gt_candidate, grad, 1.0);
  if (learning_rate != 0.0) {
    auto params = policy.params();
    for (std::size_t k = 0; k < kFeatureDim; ++k) {
      params[k] += learning_rate * grad[k];
    }
    policy.set_params(params);
  }
  return ll;
}

double ToyPolicyModel::log_prob(std::size_t query_id, std::size_t candidate,
                                std::span<double> grad, double scale) const {
  return policy_.log_prob(contexts_[query_id], candidate, grad, scale);
}

double ToyPolicyModel::exact_kl(std::size_t query_id,
                                std::span<const double> ref_params,
                                std::span<double> grad, double scale) const {
  return policy_.exact_kl(contexts_[query_id], ref_params, grad, scale);
}

}  // namespace georft
