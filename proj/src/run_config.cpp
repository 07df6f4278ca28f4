#include "georft/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "georft/util.hpp"

namespace georft {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> kKeys = {
      "variant",         "group_size",      "clip_eps_low",
      "clip_eps_high",   "kl_beta",         "std_epsilon",
      "learning_rate",   "kl_mode",         "reward_weights",
      "format_check",    "temperature",     "fault_rate",
      "subset_cap",      "train_dataset",   "eval_dataset",
      "shots",           "seed",            "steps",
      "queries_per_step", "inner_steps",    "eval_every",
      "checkpoint_every", "checkpoint_dir", "diagnostics_path",
      "early_stop"};
  return kKeys;
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config field \"") + key +
                      "\" has the wrong type");
  }
}

std::string resolve(const std::string& path,
                    const std::filesystem::path& base) {
  if (path.empty() || base.empty()) return path;
  const std::filesystem::path p(path);
  return p.is_absolute() ? path : (base / p).lexically_normal().string();
}

}  // namespace

std::string_view train_variant_name(TrainVariant v) {
  switch (v) {
    case TrainVariant::kGrpo:
      return "grpo";
    case TrainVariant::kDapo:
      return "dapo";
    case TrainVariant::kSft:
      return "sft";
  }
  return "grpo";
}

nlohmann::json RunConfig::to_json() const {
  return {
      {"variant", train_variant_name(variant)},
      {"group_size", grpo.group_size},
      {"clip_eps_low", grpo.clip_eps_low},
      {"clip_eps_high", grpo.clip_eps_high},
      {"kl_beta", grpo.kl_beta},
      {"std_epsilon", grpo.std_epsilon},
      {"learning_rate", grpo.learning_rate},
      {"kl_mode", grpo.kl_mode == KlMode::kExact ? "exact" : "estimator"},
      {"reward_weights", {{"format", weights.format}, {"metrics", weights.metrics}}},
      {"format_check",
       format_check == FormatCheck::kStrict ? "strict" : "tags_only"},
      {"temperature", temperature},
      {"fault_rate", fault_rate},
      {"subset_cap", subset_cap},
      {"train_dataset", train_dataset},
      {"eval_dataset", eval_dataset},
      {"shots", shots},
      {"seed", seed},
      {"steps", steps},
      {"queries_per_step", queries_per_step},
      {"inner_steps", inner_steps},
      {"eval_every", eval_every},
      {"checkpoint_every", checkpoint_every},
      {"checkpoint_dir", checkpoint_dir},
      {"diagnostics_path", diagnostics_path},
      {"early_stop",
       {{"enabled", early_stop.enabled},
        {"window", early_stop.window},
        {"min_delta", early_stop.min_delta}}},
  };
}

RunConfig RunConfig::from_json(const nlohmann::json& j,
                               const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known_keys().count(key)) {
      throw ConfigError("unknown config field \"" + key + "\"");
    }
  }
  RunConfig c;
  std::string variant = "grpo";
  read(j, "variant", variant);
  if (variant == "grpo") {
    c.variant = TrainVariant::kGrpo;
  } else if (variant == "dapo") {
    c.variant = TrainVariant::kDapo;
    c.grpo = GrpoConfig::dapo();
  } else if (variant == "sft") {
    c.variant = TrainVariant::kSft;
  } else {
    throw ConfigError("variant must be grpo, dapo or sft");
  }
  read(j, "group_size", c.grpo.group_size);
  read(j, "clip_eps_low", c.grpo.clip_eps_low);
  read(j, "clip_eps_high", c.grpo.clip_eps_high);
  if (c.variant != TrainVariant::kDapo && !j.contains("clip_eps_high")) {
    c.grpo.clip_eps_high = c.grpo.clip_eps_low;
  }
  read(j, "kl_beta", c.grpo.kl_beta);
  read(j, "std_epsilon", c.grpo.std_epsilon);
  read(j, "learning_rate", c.grpo.learning_rate);
  std::string kl_mode = "estimator";
  read(j, "kl_mode", kl_mode);
  if (kl_mode == "estimator") {
    c.grpo.kl_mode = KlMode::kEstimator;
  } else if (kl_mode == "exact") {
    c.grpo.kl_mode = KlMode::kExact;
  } else {
    throw ConfigError("kl_mode must be estimator or exact");
  }
  if (j.contains("reward_weights")) {
    const auto& w = j["reward_weights"];
    if (!w.is_object()) throw ConfigError("reward_weights must be an object");
    read(w, "format", c.weights.format);
    read(w, "metrics", c.weights.metrics);
  }
  std::string check = "strict";
  read(j, "format_check", check);
  if (check == "strict") {
    c.format_check = FormatCheck::kStrict;
  } else if (check == "tags_only") {
    c.format_check = FormatCheck::kTagsOnly;
  } else {
    throw ConfigError("format_check must be strict or tags_only");
  }
  read(j, "temperature", c.temperature);
  read(j, "fault_rate", c.fault_rate);
  read(j, "subset_cap", c.subset_cap);
  read(j, "train_dataset", c.train_dataset);
  read(j, "eval_dataset", c.eval_dataset);
  read(j, "shots", c.shots);
  read(j, "seed", c.seed);
  read(j, "steps", c.steps);
  read(j, "queries_per_step", c.queries_per_step);
  read(j, "inner_steps", c.inner_steps);
  read(j, "eval_every", c.eval_every);
  read(j, "checkpoint_every", c.checkpoint_every);
  read(j, "checkpoint_dir", c.checkpoint_dir);
  read(j, "diagnostics_path", c.diagnostics_path);
  if (j.contains("early_stop")) {
    const auto& e = j["early_stop"];
    if (!e.is_object()) throw ConfigError("early_stop must be an object");
    read(e, "enabled", c.early_stop.enabled);
    read(e, "window", c.early_stop.window);
    read(e, "min_delta", c.early_stop.min_delta);
  }
  c.train_dataset = resolve(c.train_dataset, base_dir);
  c.eval_dataset = resolve(c.eval_dataset, base_dir);
  c.checkpoint_dir = resolve(c.checkpoint_dir, base_dir);
  c.diagnostics_path = resolve(c.diagnostics_path, base_dir);
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

void RunConfig::validate() const {
  try {
    grpo.validate();
  } catch (const GrpoError& e) {
    throw ConfigError(e.what());
  }
  if (weights.format < 0 || weights.metrics < 0) {
    throw ConfigError("reward weights must be >= 0");
  }
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (!(fault_rate >= 0.0 && fault_rate <= 1.0)) {
    throw ConfigError("fault_rate must lie in [0, 1]");
  }
  if (queries_per_step == 0) throw ConfigError("queries_per_step must be > 0");
  if (inner_steps == 0) throw ConfigError("inner_steps must be > 0");
  if (early_stop.enabled && early_stop.window == 0) {
    throw ConfigError("early_stop.window must be > 0");
  }
}

std::string RunConfig::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json().dump())));
  return buf;
}

}  // namespace georft
