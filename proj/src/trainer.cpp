#include "georft/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "georft/util.hpp"

namespace georft {

namespace {

constexpr std::size_t kTailLength = 10;

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

// Metrics reward of a candidate, computed through the full text pipeline.
double candidate_metric(const QueryContext& ctx, std::size_t c) {
  static const ToySegmenter kSegmenter;
  return score_completion(render_completion(ctx, c), ctx.example.gt, &ctx.scene,
                          &kSegmenter)
      .metrics;
}

struct SplitMeans {
  double sum = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  double mean() const { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
};

EvalReport set_task_report(Task task, std::span<const QueryContext> contexts,
                           const std::vector<std::vector<std::size_t>>& picks,
                           const std::vector<double>& per_example) {
  EvalReport r;
  r.task = std::string(task_name(task));
  const std::string key = task == Task::kOvd ? "map" : "giou";
  SplitMeans all, uniq, non_uniq;
  std::map<std::string, SplitMeans> cats;
  std::vector<std::vector<LabeledBox>> preds, gts;
  std::vector<std::vector<LabeledBox>> preds_u, gts_u, preds_n, gts_n;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto& ctx = contexts[i];
    const double v = per_example[i];
    all.add(v);
    (ctx.example.unique ? uniq : non_uniq).add(v);
    cats[ctx.example.query.category].add(v);
    if (task == Task::kOvd) {
      const auto& pred = ctx.candidates[picks[i].front()].answer.ovd_items;
      preds.push_back(pred);
      gts.push_back(ctx.example.gt.ovd_items);
      (ctx.example.unique ? preds_u : preds_n).push_back(pred);
      (ctx.example.unique ? gts_u : gts_n).push_back(ctx.example.gt.ovd_items);
    }
  }
  auto table = [&](const SplitMeans& s) {
    MetricTable t{{"mean_reward", s.mean()}, {"count", static_cast<double>(s.n)}};
    if (task == Task::kGres) t[key] = s.mean();
    return t;
  };
  r.overall = table(all);
  r.unique = table(uniq);
  r.non_unique = table(non_uniq);
  if (task == Task::kOvd) {
    r.overall[key] = coco_map(preds, gts).map;
    r.unique[key] = preds_u.empty() ? 0.0 : coco_map(preds_u, gts_u).map;
    r.non_unique[key] = preds_n.empty() ? 0.0 : coco_map(preds_n, gts_n).map;
  }
  for (const auto& [cat, s] : cats) r.per_category[cat] = table(s);
  r.n = all.n;
  r.n_unique = uniq.n;
  r.n_non_unique = non_uniq.n;
  return r;
}

}  // namespace

std::vector<QueryContext> contexts_from_records(
    const std::vector<SceneRecord>& records, std::size_t subset_cap) {
  std::vector<QueryContext> out(records.size());
  for_each_index(
      records.size(),
      [&](std::size_t i) {
        auto loaded = load_example(records[i]);
        out[i] = build_context(std::move(loaded.scene),
                               std::move(loaded.example), subset_cap);
      },
      Execution::kParallel);
  return out;
}

EvalReport evaluate_policy(const ToyPolicy& policy,
                           std::span<const QueryContext> contexts,
                           const EvalOptions& options) {
  if (contexts.empty()) throw EvalError("nothing to evaluate");
  const Task task = contexts.front().example.query.task;
  for (const auto& ctx : contexts) {
    if (ctx.example.query.task != task) {
      throw EvalError("evaluation set mixes tasks");
    }
  }
  std::vector<std::vector<std::size_t>> picks(contexts.size());
  std::vector<double> per_example(contexts.size(), 0.0);
  for_each_index(
      contexts.size(),
      [&](std::size_t i) {
        picks[i] = policy.greedy(contexts[i]);
        double sum = 0.0;
        for (std::size_t c : picks[i]) sum += candidate_metric(contexts[i], c);
        per_example[i] = sum / static_cast<double>(picks[i].size());
      },
      Execution::kParallel);

  if (task != Task::kRec) {
    return set_task_report(task, contexts, picks, per_example);
  }

  std::vector<BoxPrediction> preds;
  std::vector<BoxTarget> targets;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto& ctx = contexts[i];
    const std::string id = std::to_string(i);
    BoxPrediction p{id, {}};
    for (std::size_t c : picks[i]) {
      const auto parsed = parse_rec(emit(ctx.candidates[c].answer));
      if (parsed) {
        p.boxes.push_back(parsed.value().rec_box);
      } else if (!options.drop_unparseable) {
        p.boxes.push_back(std::nullopt);
      }
    }
    if (p.boxes.empty()) continue;
    preds.push_back(std::move(p));
    targets.push_back(BoxTarget{id, *ctx.example.gt.rec_box,
                                ctx.example.query.category, ctx.example.unique});
  }
  auto report = acc_at_tau(preds, targets, options.taus);
  for (auto* t : {&report.overall, &report.unique, &report.non_unique}) {
    (*t)["mean_reward"] = (*t)["mean_iou"];
  }
  for (auto& [cat, t] : report.per_category) t["mean_reward"] = t["mean_iou"];
  return report;
}

EvalReport cross_eval(const DataSource& train, const DataSource& eval,
                      const ToyPolicy& policy, const EvalOptions& options) {
  auto report = evaluate_policy(policy, eval.contexts, options);
  report.tags["train_source"] = train.name;
  report.tags["eval_source"] = eval.name;
  return report;
}

Trainer::Trainer(RunConfig config, std::vector<QueryContext> train,
                 std::vector<QueryContext> eval)
    : config_(std::move(config)),
      train_(std::move(train)),
      eval_(std::move(eval)),
      policy_(config_.temperature),
      ref_params_(policy_.params()) {
  config_.grpo.variant =
      config_.variant == TrainVariant::kDapo ? Variant::kDapo : Variant::kGrpo;
  config_.validate();
  if (train_.empty()) throw ConfigError("training set is empty");
  for (const auto& ctx : train_) {
    if (config_.variant == TrainVariant::kSft && !ctx.gt_candidate) {
      throw ConfigError("SFT needs the ground truth inside the answer space");
    }
  }
}

std::vector<std::size_t> Trainer::draw_batch(std::mt19937_64& rng) const {
  const std::size_t q = config_.queries_per_step;
  std::vector<std::size_t> batch;
  if (train_.size() >= q) {
    std::vector<std::size_t> idx(train_.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < q; ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(rng() % (train_.size() - i));
      std::swap(idx[i], idx[j]);
      batch.push_back(idx[i]);
    }
  } else {
    for (std::size_t i = 0; i < q; ++i) {
      batch.push_back(static_cast<std::size_t>(rng() % train_.size()));
    }
  }
  return batch;
}

std::vector<Group> Trainer::rollout(
    std::uint64_t step_seed, const std::vector<std::size_t>& batch) const {
  const std::size_t n = config_.grpo.group_size;
  const ToyPolicy ref(ref_params_, config_.temperature);
  static const ToySegmenter kSegmenter;
  std::vector<Group> groups(batch.size());
  for_each_index(
      batch.size(),
      [&](std::size_t g) {
        const auto& ctx = train_[batch[g]];
        const auto current = policy_.log_probs(ctx);
        const auto reference = ref.log_probs(ctx);
        Group& group = groups[g];
        group.query_id = batch[g];
        for (std::size_t i = 0; i < n; ++i) {
          auto s = policy_sample(policy_, ctx, mix_seed(step_seed, g * n + i),
                                 config_.fault_rate);
          Rollout r;
          r.candidate = s.candidate;
          r.logp_current = current[s.candidate];
          r.logp_old = current[s.candidate];
          r.logp_ref = reference[s.candidate];
          r.reward = score_completion(s.text, ctx.example.gt, &ctx.scene,
                                      &kSegmenter, config_.weights,
                                      config_.format_check)
                         .total;
          r.completion = std::move(s.text);
          group.rollouts.push_back(std::move(r));
        }
      },
      Execution::kParallel);
  return groups;
}

nlohmann::json Trainer::grpo_step(std::uint64_t step_seed,
                                  const std::vector<std::size_t>& batch) {
  auto groups = rollout(step_seed, batch);
  ToyPolicyModel model(policy_, train_);
  StepDiagnostics first;
  for (std::size_t k = 0; k < config_.inner_steps; ++k) {
    auto diag = policy_step(groups, model, ref_params_, config_.grpo);
    if (!diag.error.empty()) throw GrpoError(diag.error);
    if (k == 0) first = diag;
  }
  reward_history_.push_back(first.mean_reward);
  return diagnostics_json(step_, first);
}

nlohmann::json Trainer::sft_step_batch(std::uint64_t step_seed,
                                       const std::vector<std::size_t>& batch) {
  // Rewards of on-policy samples are tracked for comparability with GRPO;
  // they do not affect the update.
  const auto groups = rollout(step_seed, batch);
  double reward_sum = 0.0, kl_sum = 0.0;
  std::size_t count = 0;
  for (const auto& g : groups) {
    for (const auto& r : g.rollouts) {
      reward_sum += r.reward;
      kl_sum += kl_k3(r.logp_current, r.logp_ref);
      ++count;
    }
  }
  std::vector<std::vector<double>> parts(batch.size(),
                                         std::vector<double>(kFeatureDim, 0.0));
  std::vector<double> ll(batch.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for_each_index(
      batch.size(),
      [&](std::size_t b) {
        const auto& ctx = train_[batch[b]];
        ll[b] = policy_.log_prob(ctx, *ctx.gt_candidate, parts[b], scale);
      },
      Execution::kParallel);
  std::vector<double> grad(kFeatureDim, 0.0);
  kernels::ordered_sum(parts, grad);
  auto params = policy_.params();
  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    params[k] += config_.grpo.learning_rate * grad[k];
  }
  policy_.set_params(params);

  StepDiagnostics d;
  d.objective = mean_of(ll);
  d.mean_reward = count ? reward_sum / static_cast<double>(count) : 0.0;
  d.mean_kl = count ? kl_sum / static_cast<double>(count) : 0.0;
  d.applied = true;
  reward_history_.push_back(d.mean_reward);
  return diagnostics_json(step_, d);
}

nlohmann::json Trainer::step() {
  const std::uint64_t step_seed = mix_seed(config_.seed, step_);
  std::mt19937_64 rng(step_seed);
  const auto batch = draw_batch(rng);
  auto line = config_.variant == TrainVariant::kSft
                  ? sft_step_batch(mix_seed(step_seed, 1), batch)
                  : grpo_step(mix_seed(step_seed, 1), batch);
  ++step_;
  const std::size_t keep = 2 * std::max<std::size_t>(config_.early_stop.window, 1);
  if (reward_history_.size() > keep) {
    reward_history_.erase(reward_history_.begin(),
                          reward_history_.end() - static_cast<std::ptrdiff_t>(keep));
  }
  tail_.push_back(line);
  if (tail_.size() > kTailLength) tail_.erase(tail_.begin());
  return line;
}

bool Trainer::converged() const {
  if (!config_.early_stop.enabled) return false;
  const std::size_t w = config_.early_stop.window;
  if (reward_history_.size() < 2 * w) return false;
  const std::span<const double> h(reward_history_);
  const auto recent = h.subspan(h.size() - w, w);
  const auto before = h.subspan(h.size() - 2 * w, w);
  return mean_of(recent) - mean_of(before) < config_.early_stop.min_delta;
}

TrainResult Trainer::run(
    const std::function<void(const nlohmann::json&)>& sink) {
  TrainResult result;
  while (step_ < config_.steps) {
    if (converged()) {
      result.early_stopped = true;
      break;
    }
    auto line = step();
    ++result.steps_run;
    if (sink) sink(line);
    result.diagnostics.push_back(std::move(line));
    if (config_.eval_every > 0 && !eval_.empty() &&
        step_ % config_.eval_every == 0) {
      auto report = evaluate_policy(policy_, eval_).to_json();
      report["step"] = step_;
      result.evals.push_back(std::move(report));
    }
    if (config_.checkpoint_every > 0 && !config_.checkpoint_dir.empty() &&
        step_ % config_.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "step_%06zu.json", step_);
      checkpoint().save(std::filesystem::path(config_.checkpoint_dir) / name);
    }
  }
  return result;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.step = step_;
  c.task = std::string(task_name(train_.front().example.query.task));
  c.variant = std::string(train_variant_name(config_.variant));
  c.params = policy_.params();
  c.ref_params = ref_params_;
  c.temperature = policy_.temperature();
  c.seed = config_.seed;
  c.config_digest = config_.digest();
  c.reward_history = reward_history_;
  c.diagnostics_tail = tail_;
  return c;
}

void Trainer::restore(const Checkpoint& checkpoint) {
  if (checkpoint.task != task_name(train_.front().example.query.task)) {
    throw CheckpointError("checkpoint task \"" + checkpoint.task +
                          "\" does not match the training set");
  }
  if (checkpoint.seed != config_.seed) {
    throw CheckpointError("checkpoint seed differs from the run seed");
  }
  if (checkpoint.temperature != config_.temperature) {
    throw CheckpointError("checkpoint temperature differs from the config");
  }
  policy_.set_params(checkpoint.params);
  ref_params_ = checkpoint.ref_params;
  step_ = checkpoint.step;
  reward_history_ = checkpoint.reward_history;
  tail_ = checkpoint.diagnostics_tail;
}

}  // namespace georft
