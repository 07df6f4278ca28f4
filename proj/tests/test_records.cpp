#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "georft/checkpoint.hpp"
#include "georft/records.hpp"
#include "georft/run_config.hpp"
#include "georft/trainer.hpp"

using namespace georft;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "georft_unit";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::vector<SceneRecord> small_set(std::uint64_t seed = 1) {
  GenDataOptions g;
  g.seed = seed;
  g.difficulty = 2;
  g.counts = {4, 3, 3};
  return generate_records(g);
}

}  // namespace

TEST_SUITE("records") {

TEST_CASE("records survive a JSON round trip") {
  const auto records = small_set();
  REQUIRE(records.size() == 10);
  for (const auto& r : records) {
    CHECK(SceneRecord::from_json(r.to_json()) == r);
    const auto loaded = load_example(r);
    CHECK(loaded.example.targets.size() == r.targets.size());
  }
  const auto path = temp_file("round.jsonl");
  write_jsonl(path, records);
  CHECK(read_jsonl(path) == records);
  CHECK(generate_records({1, 2, {4, 3, 3}, SceneDistribution::kBase}) == records);
}

TEST_CASE("read_jsonl reports the failing line") {
  const auto records = small_set();
  const auto path = temp_file("bad.jsonl");
  write_text(path, records[0].to_json().dump() + "\n{not json}\n");
  try {
    read_jsonl(path);
    FAIL("expected RecordError");
  } catch (const RecordError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  write_text(path, records[0].to_json().dump() + "\n\n" + records[0].to_json().dump() + "\n");
  CHECK_THROWS_WITH_AS(read_jsonl(path), doctest::Contains("duplicate id"), RecordError);
  CHECK_THROWS_AS(read_jsonl(temp_file("missing.jsonl")), RecordError);
}

TEST_CASE("schema violations") {
  auto j = small_set()[0].to_json();
  auto k = j;
  k["task"] = "caption";
  CHECK_THROWS_AS(SceneRecord::from_json(k), RecordError);
  k = j;
  k.erase("targets");
  CHECK_THROWS_AS(SceneRecord::from_json(k), RecordError);
  k = j;
  k["targets"].push_back(k["targets"][0]);
  CHECK_THROWS_AS(SceneRecord::from_json(k), RecordError);
  k = j;
  k["image"] = {{"type", "file"}, {"path", "x.png"}};
  const auto file_record = SceneRecord::from_json(k);
  CHECK_FALSE(file_record.image.synthetic());
  CHECK_THROWS_AS(load_example(file_record), RecordError);
}

TEST_CASE("few-shot records") {
  GenDataOptions g;
  g.counts.rec = 104;
  const auto pool = generate_records(g);
  FewShotConfig cfg;
  cfg.shots = 2;
  const auto picked = few_shot_records(pool, cfg);
  std::map<std::string, int> per;
  for (const auto& r : picked) ++per[r.category];
  CHECK(per.size() == 26);
  for (const auto& [c, n] : per) CHECK(n >= 2);
  CHECK(picked.size() < pool.size());
}

}

TEST_SUITE("config") {

TEST_CASE("defaults and variants") {
  const auto c = RunConfig::from_json(nlohmann::json::object());
  CHECK(c.variant == TrainVariant::kGrpo);
  CHECK(c.grpo.group_size == 8);
  CHECK(c.grpo.clip_eps_low == 0.2);
  CHECK(c.grpo.kl_beta == 0.04);
  const auto d = RunConfig::from_json({{"variant", "dapo"}});
  CHECK(d.grpo.clip_eps_high == 0.28);
  CHECK(d.grpo.kl_beta == 0.0);
  CHECK(RunConfig::from_json(c.to_json()).to_json() == c.to_json());
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK_THROWS_WITH_AS(RunConfig::from_json({{"lr", 0.1}}), doctest::Contains("lr"),
                       ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"variant", "ppo"}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"group_size", "eight"}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"group_size", 1}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"temperature", 0}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"kl_mode", "k2"}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::array()), ConfigError);
}

TEST_CASE("relative paths resolve against the config directory") {
  const auto c = RunConfig::from_json({{"train_dataset", "data/train.jsonl"},
                                       {"eval_dataset", "/abs/eval.jsonl"}},
                                      "/cfg");
  CHECK(fs::path(c.train_dataset) == fs::path("/cfg/data/train.jsonl"));
  CHECK(c.eval_dataset == "/abs/eval.jsonl");
}

TEST_CASE("digest ignores key order") {
  const auto a = RunConfig::from_json(nlohmann::json::parse(R"({"seed": 3, "steps": 10})"));
  const auto b = RunConfig::from_json(nlohmann::json::parse(R"({"steps": 10, "seed": 3})"));
  CHECK(a.digest() == b.digest());
  CHECK(a.digest() != RunConfig::from_json({{"seed", 4}, {"steps", 10}}).digest());
}

}

TEST_SUITE("checkpoint") {

namespace {
Trainer make_trainer(std::uint64_t seed = 7) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.steps = 6;
  cfg.queries_per_step = 4;
  cfg.early_stop.enabled = false;
  GenDataOptions g;
  g.seed = 2;
  g.counts.rec = 12;
  return Trainer(cfg, contexts_from_records(generate_records(g)));
}
}  // namespace

TEST_CASE("save, load and validate") {
  auto t = make_trainer();
  t.step();
  t.step();
  const auto ck = t.checkpoint();
  const auto path = temp_file("ck.json");
  ck.save(path);
  const auto back = Checkpoint::load(path);
  CHECK(back.to_json() == ck.to_json());
  CHECK(back.step == 2);

  auto j = ck.to_json();
  j["format_version"] = 99;
  CHECK_THROWS_AS(Checkpoint::from_json(j), CheckpointError);
  j = ck.to_json();
  j["params"]["dim"] = 3;
  CHECK_THROWS_AS(Checkpoint::from_json(j), CheckpointError);
  j = ck.to_json();
  j["ref_params"] = std::vector<double>{1.0};
  CHECK_THROWS_AS(Checkpoint::from_json(j), CheckpointError);
  j = ck.to_json();
  j.erase("rng");
  CHECK_THROWS_AS(Checkpoint::from_json(j), CheckpointError);
  CHECK_THROWS_AS(Checkpoint::load(temp_file("nothing.json")), CheckpointError);
}

TEST_CASE("resume continues bit-exactly") {
  auto a = make_trainer();
  for (int i = 0; i < 5; ++i) a.step();
  auto b = make_trainer();
  b.step();
  b.step();
  auto c = make_trainer();
  c.restore(b.checkpoint());
  for (int i = 0; i < 3; ++i) c.step();
  CHECK(c.policy().params() == a.policy().params());
  CHECK(c.current_step() == 5);
}

TEST_CASE("restore rejects mismatched runs") {
  auto t = make_trainer();
  t.step();
  auto ck = t.checkpoint();
  auto other = make_trainer(8);
  CHECK_THROWS_AS(other.restore(ck), CheckpointError);
  auto same = make_trainer();
  ck.task = "ovd";
  CHECK_THROWS_AS(same.restore(ck), CheckpointError);
  ck = t.checkpoint();
  ck.temperature = 0.5;
  CHECK_THROWS_AS(same.restore(ck), CheckpointError);
}

TEST_CASE("early stopping needs two full windows") {
  RunConfig cfg;
  cfg.steps = 100;
  cfg.queries_per_step = 2;
  cfg.early_stop.window = 3;
  cfg.early_stop.min_delta = 10.0;  // any plateau qualifies
  GenDataOptions g;
  g.counts.rec = 6;
  Trainer t(cfg, contexts_from_records(generate_records(g)));
  for (int i = 0; i < 5; ++i) {
    t.step();
    CHECK_FALSE(t.converged());
  }
  t.step();
  CHECK(t.converged());
  const auto result = t.run();
  CHECK(t.current_step() == 6);
  (void)result;
}

TEST_CASE("trainer input checks") {
  RunConfig cfg;
  CHECK_THROWS_AS(Trainer(cfg, {}), ConfigError);
}

}
