#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "georft/grpo.hpp"
#include "georft/records.hpp"
#include "georft/trainer.hpp"

using namespace georft;

TEST_SUITE("grpo") {

TEST_CASE("advantages") {
  const GrpoConfig cfg;
  const auto a = compute_advantages(std::vector<double>{0.0, 1.0}, cfg);
  CHECK(a[0] == -0.5 / (0.5 + 1e-6));
  CHECK(a[1] == 0.5 / (0.5 + 1e-6));
  for (double v : compute_advantages(std::vector<double>{2.0, 2.0, 2.0}, cfg)) {
    CHECK(v == 0.0);
  }
  CHECK_THROWS_AS(compute_advantages(std::vector<double>{1.0}, cfg), GrpoError);
}

TEST_CASE("config validation and DAPO defaults") {
  const auto d = GrpoConfig::dapo();
  CHECK(d.clip_eps_low == 0.2);
  CHECK(d.clip_eps_high == 0.28);
  CHECK(d.kl_beta == 0.0);
  GrpoConfig c;
  c.group_size = 1;
  CHECK_THROWS_AS(c.validate(), GrpoError);
  c = {};
  c.clip_eps_high = 0.1;
  CHECK_THROWS_AS(c.validate(), GrpoError);
  c = {};
  c.kl_beta = -1;
  CHECK_THROWS_AS(c.validate(), GrpoError);
  CHECK_NOTHROW(GrpoConfig{}.validate());
}

TEST_CASE("k3 estimator") {
  // x = 0.5: 0.5 - ln 0.5 - 1.
  CHECK(kl_k3(std::log(0.5), std::log(0.25)) ==
        doctest::Approx(std::log(2.0) - 0.5).epsilon(1e-14));
  CHECK(kl_k3(-1.0, -1.0) == 0.0);
  CHECK(kl_k3(-1.0, -1.0 + 1e-12) >= 0.0);
  // Gradient against a central difference.
  const double lc = -1.3, lr = -0.4, h = 1e-6;
  CHECK(kl_k3_grad(lc, lr) ==
        doctest::Approx((kl_k3(lc + h, lr) - kl_k3(lc - h, lr)) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("exact KL") {
  const std::vector<double> p{std::log(0.5), std::log(0.5)};
  const std::vector<double> q{std::log(0.25), std::log(0.75)};
  CHECK(exact_kl(p, q) == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)));
  CHECK(exact_kl(p, p) == 0.0);
}

TEST_CASE("clipped term branches") {
  const GrpoConfig g;
  const double up = std::log(1.5), down = std::log(0.5);
  auto t = clipped_term(up, 0.0, 1.0, g);
  CHECK(t.value == doctest::Approx(1.2));
  CHECK(t.dlogp == 0.0);
  CHECK(t.clipped);
  t = clipped_term(up, 0.0, -1.0, g);
  CHECK(t.value == doctest::Approx(-1.5));
  CHECK(t.dlogp == doctest::Approx(-1.5));
  CHECK_FALSE(t.clipped);
  t = clipped_term(down, 0.0, 1.0, g);
  CHECK(t.value == doctest::Approx(0.5));
  CHECK(t.dlogp == doctest::Approx(0.5));
  t = clipped_term(down, 0.0, -1.0, g);
  CHECK(t.value == doctest::Approx(-0.8));
  CHECK(t.clipped);
  // Asymmetric upper bound under DAPO only.
  CHECK(clipped_term(up, 0.0, 1.0, GrpoConfig::dapo()).value == doctest::Approx(1.28));
  GrpoConfig asym;
  asym.clip_eps_high = 0.28;
  CHECK(clipped_term(up, 0.0, 1.0, asym).value == doctest::Approx(1.2));
}

TEST_CASE("surrogate objective by hand") {
  GrpoConfig cfg;
  cfg.kl_beta = 0.1;
  Group g;
  g.rollouts = {{"", 0, std::log(1.5), 0.0, std::log(1.5), 1.0},
                {"", 1, std::log(0.5), 0.0, std::log(0.25), 0.0}};
  g.advantages = {1.0, -1.0};
  // Terms: min(1.5, 1.2) = 1.2 and min(-0.5, -0.8) = -0.8; KL 0 and ln2 - 0.5.
  const double want = (1.2 + (-0.8 - 0.1 * (std::log(2.0) - 0.5))) / 2;
  CHECK(surrogate_objective(g, cfg) == doctest::Approx(want).epsilon(1e-14));
  g.advantages.clear();
  CHECK_THROWS_AS(surrogate_objective(g, cfg), GrpoError);
}

TEST_CASE("DAPO filter keeps order") {
  std::vector<Group> gs(4);
  const double rewards[4][2] = {{1, 1}, {0, 1}, {2, 2}, {1, 0}};
  for (int i = 0; i < 4; ++i) {
    gs[i].query_id = i;
    for (double r : rewards[i]) gs[i].rollouts.push_back({"", 0, 0, 0, 0, r});
  }
  std::size_t filtered = 0;
  const auto kept = dapo_filter(gs, 1e-6, &filtered);
  CHECK(filtered == 2);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].query_id == 1);
  CHECK(kept[1].query_id == 3);
}

namespace {

struct Fixture {
  std::vector<QueryContext> contexts;
  Fixture() {
    GenDataOptions g;
    g.seed = 3;
    g.counts.rec = 8;
    contexts = contexts_from_records(generate_records(g));
  }

  std::vector<Group> groups(const ToyPolicy& p, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::vector<Group> out;
    for (std::size_t q = 0; q < contexts.size(); ++q) {
      Group g;
      g.query_id = q;
      for (int i = 0; i < 6; ++i) {
        Rollout r;
        r.candidate = p.sample(contexts[q], rng);
        r.logp_old = p.log_prob(contexts[q], r.candidate) + 0.3 * (i % 3 - 1);
        r.logp_ref = r.logp_old - 0.1;
        r.reward = static_cast<double>(rng() % 5);
        g.rollouts.push_back(r);
      }
      out.push_back(std::move(g));
    }
    return out;
  }
};

}  // namespace

TEST_CASE("surrogate gradient: serial and parallel agree bitwise") {
  Fixture f;
  std::vector<double> params(kFeatureDim);
  for (std::size_t k = 0; k < kFeatureDim; ++k) params[k] = 0.1 * std::sin(double(k));
  ToyPolicy policy(params, 1.0);
  ToyPolicyModel model(policy, f.contexts);
  GrpoConfig cfg;
  for (KlMode mode : {KlMode::kEstimator, KlMode::kExact}) {
    cfg.kl_mode = mode;
    auto g1 = f.groups(policy, 5), g2 = f.groups(policy, 5);
    std::vector<double> a(kFeatureDim), b(kFeatureDim);
    const std::vector<double> ref(kFeatureDim, 0.0);
    const double oa = surrogate_gradient(g1, model, ref, cfg, a, nullptr, Execution::kSerial);
    const double ob = surrogate_gradient(g2, model, ref, cfg, b, nullptr, Execution::kParallel);
    CHECK(oa == ob);
    CHECK(a == b);
  }
}

TEST_CASE("policy step ascends and reports diagnostics") {
  Fixture f;
  ToyPolicy policy(std::vector<double>(kFeatureDim, 0.0), 1.0);
  ToyPolicyModel model(policy, f.contexts);
  GrpoConfig cfg;
  auto groups = f.groups(policy, 9);
  const std::vector<double> ref(kFeatureDim, 0.0);
  std::vector<double> grad(kFeatureDim);
  auto probe = groups;
  const double before = surrogate_gradient(probe, model, ref, cfg, grad);
  const auto d = policy_step(groups, model, ref, cfg);
  CHECK(d.applied);
  CHECK(d.error.empty());
  CHECK(d.grad_norm > 0);
  CHECK(d.objective == doctest::Approx(before));
  CHECK(d.clip_frac >= 0.0);
  CHECK(d.clip_frac <= 1.0);
  probe = groups;
  const double after = surrogate_gradient(probe, model, ref, cfg, grad);
  CHECK(after > before);
  const auto j = diagnostics_json(3, d);
  CHECK(j["step"] == 3);
  CHECK(j.contains("clip_frac"));
}

TEST_CASE("non-finite gradient leaves parameters alone") {
  Fixture f;
  ToyPolicy policy(std::vector<double>(kFeatureDim, 0.0), 1.0);
  ToyPolicyModel model(policy, f.contexts);
  auto groups = f.groups(policy, 2);
  groups[0].rollouts[0].reward = std::numeric_limits<double>::quiet_NaN();
  const auto d = policy_step(groups, model, std::vector<double>(kFeatureDim, 0.0), GrpoConfig{});
  CHECK_FALSE(d.applied);
  CHECK_FALSE(d.error.empty());
  CHECK(policy.params() == std::vector<double>(kFeatureDim, 0.0));
}

TEST_CASE("DAPO step drops uniform groups") {
  Fixture f;
  ToyPolicy policy(std::vector<double>(kFeatureDim, 0.0), 1.0);
  ToyPolicyModel model(policy, f.contexts);
  auto groups = f.groups(policy, 4);
  for (auto& r : groups[0].rollouts) r.reward = 1.0;
  for (auto& r : groups[1].rollouts) r.reward = 0.0;
  const auto d = policy_step(groups, model, std::vector<double>(kFeatureDim, 0.0),
                             GrpoConfig::dapo());
  CHECK(d.filtered_groups == 2);
  CHECK(groups.size() == f.contexts.size() - 2);
}

}
