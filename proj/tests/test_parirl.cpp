#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "parirl/parirl.hpp"

using namespace parirl;
using testing_oracles::rel_err;

namespace {

// Random smooth reward over (s, a, s_next) for distance fixtures.
struct MlpReward {
  MlpSpec spec;
  ParamVector params;

  static MlpReward make(const MoEnv& env, uint64_t seed) {
    MlpReward r;
    int in = 2 * env.spec().state_dim + env.spec().action_dim;
    r.spec = {in, {8}, 1, Act::Tanh};
    Rng rng(seed);
    r.params = init_params(r.spec, rng);
    return r;
  }

  RewardHandle handle(std::string id) const {
    MlpSpec spec_c = spec;
    ParamVector params_c = params;
    return {std::move(id),
            [spec_c, params_c](std::span<const double> s, std::span<const double> a,
                               std::span<const double> s_next) {
              std::vector<double> in;
              in.insert(in.end(), s.begin(), s.end());
              in.insert(in.end(), a.begin(), a.end());
              in.insert(in.end(), s_next.begin(), s_next.end());
              return mlp_forward_scalar(spec_c, params_c, in);
            }};
  }
};

GaussianPolicy constant_policy(const MoEnv& env, double mean, double log_std) {
  GaussianPolicy pol =
      GaussianPolicy::make(env.spec().state_dim, env.spec().action_dim, {16}, 1);
  std::fill(pol.actor.begin(), pol.actor.end(), 0.0);
  for (int d = 0; d < env.spec().action_dim; ++d)
    pol.actor[pol.actor.size() - env.spec().action_dim + d] = mean;
  std::fill(pol.log_std.begin(), pol.log_std.end(), log_std);
  return pol;
}

}  // namespace

TEST_CASE("pairwise distances fold into the total budget") {
  CHECK(combine_pairwise({0.4}, 2) == 0.4);
  CHECK(combine_pairwise({0.3, 0.3, 0.3}, 3) == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(combine_pairwise({0.0, 0.0, 0.0}, 3) == 0.0);
  CHECK_THROWS_AS(combine_pairwise({0.1, 0.2}, 2), std::invalid_argument);
  CHECK_THROWS_AS(combine_pairwise({0.1}, 1), std::invalid_argument);
}

TEST_CASE("budget split puts the constant on the adjacent side") {
  std::vector<double> e2 = split_budget(0.4, 0, 2, 0.05);
  REQUIRE(e2.size() == 2);
  CHECK(e2[0] == 0.05);
  CHECK(e2[1] == doctest::Approx(0.35).epsilon(1e-12));

  std::vector<double> e3 = split_budget(0.45, 1, 3, 0.05);
  REQUIRE(e3.size() == 3);
  CHECK(e3[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(e3[1] == 0.05);
  CHECK(e3[2] == doctest::Approx(0.2).epsilon(1e-12));

  SUBCASE("oversized constant clamps to a quarter of the budget") {
    std::vector<std::string> warnings;
    std::vector<double> e = split_budget(0.4, 0, 2, 0.5, &warnings);
    CHECK(e[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(e[1] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(warnings.size() == 1);
    // Equality also clamps: the pre-condition is strict.
    warnings.clear();
    split_budget(0.4, 0, 2, 0.4, &warnings);
    CHECK(warnings.size() == 1);
  }

  SUBCASE("the split conserves the budget") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      int n = 2 + static_cast<int>(rng.uniform_int(4));
      double budget = rng.uniform(0.01, 2.0);
      int idx = static_cast<int>(rng.uniform_int(n));
      double c = rng.uniform(0.0, 1.5) * budget;
      std::vector<double> eps = split_budget(budget, idx, n, c);
      double sum = 0.0;
      for (double v : eps) sum += v;
      CHECK(std::fabs(sum - budget) < 1e-12);
    }
  }

  CHECK_THROWS_AS(split_budget(0.4, 2, 2, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(split_budget(-0.1, 0, 2, 0.05), std::invalid_argument);
}

TEST_CASE("small-side constant floors at 0.05 and tracks an eighth of the budget") {
  CHECK(small_side_constant(0.2) == 0.05);
  CHECK(small_side_constant(0.0) == 0.05);
  CHECK(small_side_constant(0.8) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(small_side_constant(8.0) == 1.0);
}

TEST_CASE("squared target mismatch and weighted sum terms") {
  std::vector<double> t{0.05, 0.35}, m{0.10, 0.30};
  CHECK(regularization_term(t, m) == doctest::Approx(0.005).epsilon(1e-12));
  CHECK(regularization_term(t, t) == 0.0);
  CHECK(9.0 * regularization_term(t, m) == doctest::Approx(0.045).epsilon(1e-12));

  std::vector<double> w{0.5, 0.5}, d{0.1, 0.3};
  CHECK(weighted_sum_term(w, d) == doctest::Approx(0.2).epsilon(1e-12));
  // Weights normalize: (0.05, 0.35) acts as (1/8, 7/8).
  CHECK(weighted_sum_term(t, d) == doctest::Approx(0.1 / 8.0 + 0.3 * 7.0 / 8.0).epsilon(1e-12));
  // All-zero targets fall back to equal weights.
  std::vector<double> z{0.0, 0.0};
  CHECK(weighted_sum_term(z, d) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK_THROWS_AS(regularization_term(t, z = {0.1}), std::invalid_argument);
}

TEST_CASE("two-reward budget equals the pairwise distance on shared batches") {
  MoEnv env = MoEnv::make("mo-car");
  RegularizerConfig cfg;
  cfg.n_eval = 64;
  cfg.n_canon = 64;
  MlpReward ra = MlpReward::make(env, 11), rb = MlpReward::make(env, 12),
            rc = MlpReward::make(env, 13);
  RewardHandle ha = ra.handle("a"), hb = rb.handle("b"), hc = rc.handle("c");

  double pair = measure_distance(ha, hb, env, cfg, 77).value;
  CHECK(target_budget({ha, hb}, env, cfg, 77) == pair);

  double dab = measure_distance(ha, hb, env, cfg, 78).value;
  double dac = measure_distance(ha, hc, env, cfg, 78).value;
  double dbc = measure_distance(hb, hc, env, cfg, 78).value;
  CHECK(target_budget({ha, hb, hc}, env, cfg, 78) ==
        doctest::Approx((dab + dac + dbc) / 2.0).epsilon(1e-15));
}

TEST_CASE("regularizer value is beta-linear and zero at met targets") {
  MoEnv env = MoEnv::make("mo-car");
  RegularizerConfig cfg;
  cfg.n_eval = 32;
  cfg.n_canon = 16;
  std::vector<RewardHandle> prev{MlpReward::make(env, 21).handle("p0"),
                                 MlpReward::make(env, 22).handle("p1")};
  Discriminator disc = Discriminator::make(2, 1, env.spec().gamma, 23, {6}, {5});

  DiscRegularizer reg1(env, prev, {0.05, 0.35}, cfg, TransitionSampler::uniform(env), 31);
  reg1.set_auto_refresh(false);
  reg1.refresh();
  double v1 = reg1.eval(disc, nullptr, nullptr);
  CHECK(v1 > 0.0);

  RegularizerConfig cfg9 = cfg;
  cfg9.beta = 9.0;
  RegularizerConfig cfg1 = cfg;
  cfg1.beta = 1.0;
  DiscRegularizer rega(env, prev, {0.05, 0.35}, cfg9, TransitionSampler::uniform(env), 31);
  DiscRegularizer regb(env, prev, {0.05, 0.35}, cfg1, TransitionSampler::uniform(env), 31);
  rega.set_auto_refresh(false);
  regb.set_auto_refresh(false);
  rega.refresh();
  regb.refresh();
  CHECK(rega.eval(disc, nullptr, nullptr) == 9.0 * regb.eval(disc, nullptr, nullptr));

  // Setting the targets to the distances the same frozen batches measure
  // zeroes the penalty exactly.
  regb.eval(disc, nullptr, nullptr);
  DiscRegularizer regz(env, prev, regb.last_measured(), cfg9, TransitionSampler::uniform(env), 31);
  regz.set_auto_refresh(false);
  regz.refresh();
  CHECK(regz.eval(disc, nullptr, nullptr) == 0.0);

  // Zero beta reduces the regularized loss to the plain discriminator loss.
  RegularizerConfig cfg0 = cfg;
  cfg0.beta = 0.0;
  DiscRegularizer reg0(env, prev, {0.05, 0.35}, cfg0, TransitionSampler::uniform(env), 31);
  reg0.set_auto_refresh(false);
  reg0.refresh();
  Rng rng(33);
  DiscBatch batch;
  for (int i = 0; i < 8; ++i) {
    Transition tr = env.sample_uniform_transitions(1, rng)[0];
    batch.policy_side.push_back(tr);
    batch.policy_logp.push_back(-1.0);
    batch.expert_side.push_back(env.sample_uniform_transitions(1, rng)[0]);
    batch.expert_logp.push_back(-1.0);
  }
  CHECK(regularized_disc_loss(disc, batch, reg0) == disc_loss(disc, batch));
}

TEST_CASE("regularizer gradients match finite differences") {
  MoEnv env = MoEnv::make("mo-car");
  RegularizerConfig cfg;
  cfg.n_eval = 16;
  cfg.n_canon = 8;
  cfg.beta = 9.0;
  std::vector<RewardHandle> prev{MlpReward::make(env, 41).handle("p0"),
                                 MlpReward::make(env, 42).handle("p1")};

  auto check_grads = [&](RegularizerConfig rc, bool h_flows) {
    Discriminator disc = Discriminator::make(2, 1, env.spec().gamma, 43, {6}, {5});
    DiscRegularizer reg(env, prev, {0.05, 0.35}, rc, TransitionSampler::uniform(env), 45);
    reg.set_auto_refresh(false);
    reg.refresh();
    ParamVector gg(disc.g.size(), 0.0), gh(disc.h.size(), 0.0);
    reg.eval(disc, &gg, &gh);

    Discriminator probe = disc;
    auto value_at = [&] { return reg.eval(probe, nullptr, nullptr); };
    for (size_t i = 0; i < probe.g.size(); i += 3) {
      double fd = testing_oracles::fd_partial(probe.g, i, 1e-6, value_at);
      CHECK(rel_err(gg[i], fd, 1e-8) < 1e-3);
    }
    if (h_flows) {
      for (size_t i = 0; i < probe.h.size(); i += 3) {
        double fd = testing_oracles::fd_partial(probe.h, i, 1e-6, value_at);
        CHECK(rel_err(gh[i], fd, 1e-8) < 1e-3);
      }
    } else {
      // Canonicalization removes the shaping term up to a batch constant, so
      // the penalty is exactly independent of h: both the analytic gradient
      // and the finite difference vanish identically.
      for (double v : gh) CHECK(v == 0.0);
      for (size_t i = 0; i < probe.h.size(); i += 3)
        CHECK(testing_oracles::fd_partial(probe.h, i, 1e-6, value_at) == 0.0);
    }
  };

  SUBCASE("epic target-distance mode") { check_grads(cfg, false); }
  SUBCASE("epic weighted-sum mode") {
    RegularizerConfig rc = cfg;
    rc.mode = RegMode::WeightedSum;
    check_grads(rc, false);
  }
  SUBCASE("mse mode reaches the shaping net") {
    RegularizerConfig rc = cfg;
    rc.kind = DistanceKind::Mse;
    check_grads(rc, true);
  }
}

TEST_CASE("regret diagnostic is the preference-weighted distance sum") {
  MoEnv env = MoEnv::make("mo-car");
  RegularizerConfig cfg;
  cfg.n_eval = 64;
  cfg.n_canon = 64;
  RewardHandle r = MlpReward::make(env, 51).handle("r");
  RewardHandle c1 = MlpReward::make(env, 52).handle("c1");
  RewardHandle c2 = MlpReward::make(env, 53).handle("c2");
  std::vector<RewardHandle> comps{c1, c2};

  std::vector<double> basis{1.0, 0.0};
  CHECK(regret_diagnostic(r, comps, basis, env, cfg, 61) ==
        measure_distance(r, c1, env, cfg, 61).value);
  CHECK(regret_diagnostic(c1, comps, basis, env, cfg, 61) == 0.0);

  std::vector<double> half{0.5, 0.5};
  double d1 = measure_distance(r, c1, env, cfg, 62).value;
  double d2 = measure_distance(r, c2, env, cfg, 62).value;
  CHECK(regret_diagnostic(r, comps, half, env, cfg, 62) ==
        doctest::Approx(0.5 * d1 + 0.5 * d2).epsilon(1e-15));

  std::vector<double> bad{1.0};
  CHECK_THROWS_AS(regret_diagnostic(r, comps, bad, env, cfg, 61), std::invalid_argument);
}

TEST_CASE("recursive budget rule divides the remaining steps with a floor") {
  ParirlConfig cfg;
  cfg.step1_budget = 25000;
  cfg.steps = 6;
  CHECK(recursive_budget(cfg) == 2500);  // 25000/(2*6-2) of the step-1 budget
  cfg.steps = 20;
  CHECK(recursive_budget(cfg) == 833);  // floor at 1/30 beats 25000/38
  cfg.steps = 2;
  CHECK(recursive_budget(cfg) == 12500);
  cfg.steps = 1;
  CHECK(recursive_budget(cfg) == 0);
  cfg.recursive_budget = 123;
  CHECK(recursive_budget(cfg) == 123);
}

TEST_CASE("two-step recursion yields four policies with coherent bookkeeping") {
  MoEnv env = MoEnv::make("mo-car");
  GaussianPolicy fast = constant_policy(env, 0.8, std::log(0.3));
  GaussianPolicy still = constant_policy(env, 0.0, std::log(0.3));
  std::vector<Dataset> experts{collect_dataset(fast, env, 3, 71, "expert-0"),
                               collect_dataset(still, env, 3, 72, "expert-1")};

  ParirlConfig cfg;
  cfg.airl.ppo.batch_steps = 512;
  cfg.airl.ppo.epochs = 3;
  cfg.airl.ppo.minibatches = 2;
  cfg.airl.bc_steps = 50;
  cfg.reg.n_eval = 32;
  cfg.reg.n_canon = 32;
  cfg.steps = 2;
  cfg.step1_budget = 1024;
  cfg.recursive_budget = 512;
  cfg.dataset_episodes = 2;

  int callbacks = 0;
  std::vector<std::string> seen_ids;
  ParirlResult res = run_parirl(experts, env, cfg, 99,
                                [&](const ParetoPolicyRecord& rec, const Dataset& ds,
                                    const StepDiagnostics& diag) {
                                  ++callbacks;
                                  seen_ids.push_back(rec.id);
                                  CHECK(ds.policy_id == rec.id);
                                  CHECK(diag.step == rec.step);
                                  CHECK(diag.branch == rec.branch);
                                });

  REQUIRE(res.pareto_set.size() == 4);
  CHECK(callbacks == 4);
  std::vector<std::string> want{"g1-b0", "g1-b1", "g2-b0", "g2-b1"};
  CHECK(seen_ids == want);
  for (size_t i = 0; i < 4; ++i) CHECK(res.pareto_set[i].id == want[i]);

  REQUIRE(res.diagnostics.size() == 4);
  for (const StepDiagnostics& d : res.diagnostics) {
    long budget = d.step == 1 ? cfg.step1_budget : cfg.recursive_budget;
    CHECK(d.env_steps >= budget);
    CHECK(d.env_steps <= budget + cfg.airl.ppo.batch_steps);
    if (d.step == 1) {
      CHECK(d.targets.empty());
      CHECK(d.budget == 0.0);
    } else {
      CHECK(d.budget > 0.0);
      REQUIRE(d.targets.size() == 2);
      REQUIRE(d.measured.size() == 2);
      double c = std::max(0.05, d.budget / 8.0);
      if (c >= d.budget) c = d.budget / 4.0;
      CHECK(d.targets[d.branch] == doctest::Approx(c).epsilon(1e-12));
      double sum = d.targets[0] + d.targets[1];
      CHECK(std::fabs(sum - d.budget) < 1e-12);
      // A fork starts from copied parameters, so its pre-training distance
      // to the parent reward is exactly zero.
      CHECK(d.fork_distance == 0.0);
      CHECK(d.regret >= 0.0);
      CHECK(d.reg_term >= 0.0);
    }
  }

  REQUIRE(res.final_datasets.size() == 2);
  CHECK(res.final_datasets[0].policy_id == "g2-b0");
  CHECK(res.final_datasets[1].policy_id == "g2-b1");
  for (const Dataset& d : res.final_datasets)
    CHECK(d.records.size() == static_cast<size_t>(2 * env.spec().horizon));

  SUBCASE("the whole recursion is bitwise deterministic") {
    ParirlResult res2 = run_parirl(experts, env, cfg, 99);
    CHECK(res2.pareto_set[3].policy.actor == res.pareto_set[3].policy.actor);
    CHECK(res2.pareto_set[3].disc.g == res.pareto_set[3].disc.g);
    CHECK(res2.diagnostics[3].measured == res.diagnostics[3].measured);
  }

  SUBCASE("depth one keeps only the individually imitated policies") {
    ParirlConfig g1 = cfg;
    g1.steps = 1;
    ParirlResult r1 = run_parirl(experts, env, g1, 99);
    CHECK(r1.pareto_set.size() == 2);
    CHECK(r1.diagnostics.size() == 2);
  }
}
