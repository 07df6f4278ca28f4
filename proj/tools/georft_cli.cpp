#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>

#include "georft/checkpoint.hpp"
#include "georft/records.hpp"
#include "georft/run_config.hpp"
#include "georft/service.hpp"
#include "georft/trainer.hpp"

using namespace georft;

namespace {

// Keeps records of one task. With no task given, the file must hold a
// single task.
std::vector<SceneRecord> select_task(std::vector<SceneRecord> records,
                                     const std::string& task_name) {
  if (records.empty()) throw RecordError("dataset is empty");
  Task task = records.front().task;
  if (!task_name.empty()) {
    auto t = parse_task(task_name);
    if (!t) throw RecordError("unknown task " + task_name);
    task = *t;
  }
  std::vector<SceneRecord> out;
  for (auto& r : records) {
    if (r.task == task) {
      out.push_back(std::move(r));
    } else if (task_name.empty()) {
      throw RecordError("dataset mixes tasks; pass --task");
    }
  }
  if (out.empty()) throw RecordError("no records for task " + task_name);
  return out;
}

std::vector<QueryContext> load_contexts(const std::string& path,
                                        const std::string& task,
                                        std::size_t shots, std::uint64_t seed,
                                        std::size_t cap) {
  auto records = select_task(read_jsonl(path), task);
  if (shots > 0) {
    FewShotConfig fs;
    fs.shots = shots;
    fs.seed = seed;
    records = few_shot_records(records, fs);
  }
  return contexts_from_records(records, cap);
}

std::unique_ptr<std::ostream> open_out(const std::string& path) {
  if (path.empty() || path == "-") return nullptr;
  auto f = std::make_unique<std::ofstream>(path, std::ios::trunc);
  if (!*f) throw std::runtime_error("cannot write " + path);
  return f;
}

ScoreServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verifiable-reward RL toolkit for grounding tasks"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic JSONL dataset");
  GenDataOptions gen_opts;
  std::string gen_out, gen_dist = "base";
  gen->add_option("--seed", gen_opts.seed);
  gen->add_option("--out", gen_out)->required();
  gen->add_option("--rec", gen_opts.counts.rec, "REC records");
  gen->add_option("--ovd", gen_opts.counts.ovd, "OVD records");
  gen->add_option("--gres", gen_opts.counts.gres, "GRES records");
  gen->add_option("--difficulty", gen_opts.difficulty)
      ->check(CLI::Range(0, kMaxDifficulty));
  gen->add_option("--distribution", gen_dist)
      ->check(CLI::IsMember({"base", "shifted"}));

  // train
  auto* train = app.add_subcommand("train", "Run GRPO, DAPO or SFT");
  std::string train_config, train_resume, train_out, train_task, train_eval_out;
  std::optional<std::uint64_t> train_seed;
  train->add_option("--config", train_config)->required()->check(CLI::ExistingFile);
  train->add_option("--seed", train_seed, "Overrides the config seed");
  train->add_option("--checkpoint", train_resume, "Resume from this checkpoint");
  train->add_option("--out", train_out, "Final checkpoint path");
  train->add_option("--task", train_task);
  train->add_option("--eval-out", train_eval_out, "Periodic eval reports (JSONL)");

  // eval
  auto* ev = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  std::string ev_ckpt, ev_dataset, ev_out, ev_task, ev_train_name;
  std::vector<double> ev_taus;
  std::size_t ev_cap = 12;
  bool ev_drop = false;
  ev->add_option("--checkpoint", ev_ckpt, "Omit for the untrained policy");
  ev->add_option("--dataset", ev_dataset)->required()->check(CLI::ExistingFile);
  ev->add_option("--tau", ev_taus, "Acc@tau thresholds (REC)");
  ev->add_option("--out", ev_out);
  ev->add_option("--task", ev_task);
  ev->add_option("--subset-cap", ev_cap);
  ev->add_option("--train-source", ev_train_name, "Tag for cross-distribution runs");
  ev->add_flag("--drop-unparseable", ev_drop);

  // score
  auto* sc = app.add_subcommand("score", "Score one request (JSON on stdin or file)");
  std::string sc_in;
  sc->add_option("request", sc_in, "Request file; stdin when omitted");

  // serve
  auto* sv = app.add_subcommand("serve", "HTTP reward service");
  std::string sv_host = "127.0.0.1";
  int sv_port = 8080;
  sv->add_option("--host", sv_host);
  sv->add_option("--port", sv_port);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      auto d = parse_distribution(gen_dist);
      gen_opts.distribution = *d;
      if (gen_opts.counts.rec + gen_opts.counts.ovd + gen_opts.counts.gres == 0) {
        std::cerr << "nothing to generate: pass --rec/--ovd/--gres\n";
        return 2;
      }
      const auto records = generate_records(gen_opts);
      write_jsonl(gen_out, records);
      std::cerr << "wrote " << records.size() << " records to " << gen_out << '\n';
      return 0;
    }

    if (*train) {
      auto cfg = RunConfig::load(train_config);
      if (train_seed) cfg.seed = *train_seed;
      if (cfg.train_dataset.empty()) throw ConfigError("config lacks train_dataset");
      auto train_ctx = load_contexts(cfg.train_dataset, train_task, cfg.shots,
                                     cfg.seed, cfg.subset_cap);
      std::vector<QueryContext> eval_ctx;
      if (!cfg.eval_dataset.empty()) {
        eval_ctx = load_contexts(cfg.eval_dataset, train_task, 0, 0, cfg.subset_cap);
      }
      Trainer trainer(cfg, std::move(train_ctx), std::move(eval_ctx));
      if (!train_resume.empty()) {
        const auto ck = Checkpoint::load(train_resume);
        if (ck.config_digest != cfg.digest()) {
          std::cerr << "warning: checkpoint was written under a different config\n";
        }
        trainer.restore(ck);
      }
      auto diag = open_out(cfg.diagnostics_path);
      std::ostream& diag_os = diag ? *diag : std::cout;
      const auto result = trainer.run(
          [&](const nlohmann::json& line) { diag_os << line.dump() << '\n'; });
      if (auto eval_os = open_out(train_eval_out)) {
        for (const auto& e : result.evals) *eval_os << e.dump() << '\n';
      }
      if (!train_out.empty()) trainer.checkpoint().save(train_out);
      std::cerr << "ran " << result.steps_run << " steps"
                << (result.early_stopped ? " (early stop)" : "") << ", at step "
                << trainer.current_step() << '\n';
      return 0;
    }

    if (*ev) {
      ToyPolicy policy;
      if (!ev_ckpt.empty()) {
        const auto ck = Checkpoint::load(ev_ckpt);
        policy = ToyPolicy(ck.params, ck.temperature);
      }
      const auto ctx = load_contexts(ev_dataset, ev_task, 0, 0, ev_cap);
      EvalOptions opts;
      if (!ev_taus.empty()) opts.taus = ev_taus;
      opts.drop_unparseable = ev_drop;
      auto report = ev_train_name.empty()
                        ? evaluate_policy(policy, ctx, opts)
                        : cross_eval({ev_train_name, {}}, {ev_dataset, ctx},
                                     policy, opts);
      const auto text = report.to_json().dump(2);
      if (auto out = open_out(ev_out)) {
        *out << text << '\n';
      } else {
        std::cout << text << '\n';
      }
      return 0;
    }

    if (*sc) {
      std::string body;
      if (sc_in.empty()) {
        body.assign(std::istreambuf_iterator<char>(std::cin), {});
      } else {
        std::ifstream in(sc_in);
        if (!in) throw std::runtime_error("cannot open " + sc_in);
        body.assign(std::istreambuf_iterator<char>(in), {});
      }
      const auto r = handle_score_text(body);
      std::cout << r.body.dump() << '\n';
      return r.status == 200 ? 0 : 2;
    }

    if (*sv) {
      ScoreServer server;
      const int port = server.bind(sv_host, sv_port);
      if (port < 0) {
        std::cerr << "cannot bind " << sv_host << ':' << sv_port << '\n';
        return 1;
      }
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << sv_host << ':' << port << '\n';
      server.listen();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
