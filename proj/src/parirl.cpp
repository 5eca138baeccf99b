#include "parirl/parirl.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace parirl {

RewardHandle reward_from_disc(std::string id, const Discriminator& disc) {
  auto frozen = std::make_shared<const Discriminator>(disc);
  return {std::move(id),
          [frozen](std::span<const double> s, std::span<const double> a,
                   std::span<const double> s_next) { return frozen->r_tilde(s, a, s_next); }};
}

DistanceEstimate measure_distance(const RewardHandle& a, const RewardHandle& b, const MoEnv& env,
                                  const RegularizerConfig& cfg, uint64_t seed,
                                  const TransitionSampler* eval_sampler) {
  if (cfg.kind == DistanceKind::Epic)
    return epic_distance(a, b, env, cfg.n_eval, cfg.n_canon, seed, eval_sampler);
  Rng eval_rng(derive_seed(seed, "eval", 0));
  std::vector<Transition> batch = eval_sampler
                                      ? eval_sampler->sample(cfg.n_eval, eval_rng)
                                      : TransitionSampler::uniform(env).sample(cfg.n_eval, eval_rng);
  return {mse_distance(a.fn, b.fn, batch), cfg.n_eval, seed};
}

double combine_pairwise(const std::vector<double>& pairwise, int n_rewards) {
  if (n_rewards < 2) throw std::invalid_argument("combine_pairwise: need at least 2 rewards");
  size_t expect = static_cast<size_t>(n_rewards) * (n_rewards - 1) / 2;
  if (pairwise.size() != expect)
    throw std::invalid_argument("combine_pairwise: pairwise count mismatch");
  double sum = 0.0;
  for (double d : pairwise) sum += d;
  return sum / static_cast<double>(n_rewards - 1);
}

double target_budget(const std::vector<RewardHandle>& prev, const MoEnv& env,
                     const RegularizerConfig& cfg, uint64_t seed,
                     const TransitionSampler* eval_sampler) {
  if (prev.size() < 2) throw std::invalid_argument("target_budget: need at least 2 rewards");
  std::vector<double> pairwise;
  for (size_t k = 0; k < prev.size(); ++k)
    for (size_t l = k + 1; l < prev.size(); ++l)
      pairwise.push_back(measure_distance(prev[k], prev[l], env, cfg, seed, eval_sampler).value);
  return combine_pairwise(pairwise, static_cast<int>(prev.size()));
}

double small_side_constant(double budget) { return std::max(0.05, budget / 8.0); }

std::vector<double> split_budget(double budget, int adjacent_index, int n_rewards, double c,
                                 std::vector<std::string>* warnings) {
  if (n_rewards < 2) throw std::invalid_argument("split_budget: need at least 2 entries");
  if (adjacent_index < 0 || adjacent_index >= n_rewards)
    throw std::invalid_argument("split_budget: adjacent index out of range");
  if (budget < 0.0) throw std::invalid_argument("split_budget: negative budget");
  if (c >= budget) {
    double clamped = budget / 4.0;
    if (warnings)
      warnings->push_back("split_budget: small-side constant " + std::to_string(c) +
                          " >= budget " + std::to_string(budget) + ", clamped to " +
                          std::to_string(clamped));
    c = clamped;
  }
  std::vector<double> eps(n_rewards, (budget - c) / static_cast<double>(n_rewards - 1));
  eps[adjacent_index] = c;
  return eps;
}

double regularization_term(std::span<const double> targets, std::span<const double> measured) {
  if (targets.size() != measured.size())
    throw std::invalid_argument("regularization_term: size mismatch");
  double acc = 0.0;
  for (size_t j = 0; j < targets.size(); ++j) {
    double diff = targets[j] - measured[j];
    acc += diff * diff;
  }
  return acc;
}

double weighted_sum_term(std::span<const double> targets, std::span<const double> measured) {
  if (targets.size() != measured.size())
    throw std::invalid_argument("weighted_sum_term: size mismatch");
  double wsum = 0.0;
  for (double t : targets) wsum += t;
  double acc = 0.0;
  for (size_t j = 0; j < targets.size(); ++j) {
    double w = wsum > 0.0 ? targets[j] / wsum : 1.0 / static_cast<double>(targets.size());
    acc += w * measured[j];
  }
  return acc;
}

DiscRegularizer::DiscRegularizer(const MoEnv& env, std::vector<RewardHandle> prev,
                                 std::vector<double> targets, RegularizerConfig cfg,
                                 TransitionSampler eval_sampler, uint64_t seed)
    : env_(env),
      prev_(std::move(prev)),
      targets_(std::move(targets)),
      cfg_(cfg),
      eval_sampler_(std::move(eval_sampler)),
      eval_rng_(derive_seed(seed, "reg-eval", 0)),
      canon_rng_(derive_seed(seed, "reg-canon", 0)) {
  if (prev_.empty()) throw std::invalid_argument("DiscRegularizer: no previous rewards");
  if (prev_.size() != targets_.size())
    throw std::invalid_argument("DiscRegularizer: targets/rewards size mismatch");
  if (cfg_.beta < 0.0) throw std::invalid_argument("DiscRegularizer: negative beta");
  if (cfg_.n_eval < 2 || cfg_.n_canon < 1)
    throw std::invalid_argument("DiscRegularizer: batch sizes too small");
}

void DiscRegularizer::refresh() {
  eval_batch_ = eval_sampler_.sample(cfg_.n_eval, eval_rng_);
  canon_ = make_canon_batch(env_, cfg_.n_canon, canon_rng_);
  y_dirty_ = true;
}

double DiscRegularizer::operator()(const Discriminator& disc, ParamVector& gg, ParamVector& gh) {
  if (auto_refresh_) refresh();
  return eval(disc, &gg, &gh);
}

double DiscRegularizer::eval(const Discriminator& disc, ParamVector* gg, ParamVector* gh) {
  if (eval_batch_.empty()) refresh();
  const double gamma = env_.spec().gamma;
  const size_t n = eval_batch_.size();
  const size_t m = canon_.samples.size();
  const size_t J = prev_.size();
  const bool epic = cfg_.kind == DistanceKind::Epic;

  if (y_dirty_) {
    y_.assign(J, {});
    for (size_t j = 0; j < J; ++j) {
      if (epic) {
        y_[j] = canonicalize(prev_[j].fn, eval_batch_, canon_, gamma);
      } else {
        y_[j].resize(n);
        for (size_t e = 0; e < n; ++e) {
          const Transition& tr = eval_batch_[e];
          y_[j][e] = prev_[j].fn(tr.s, tr.a, tr.s_next);
        }
      }
    }
    y_dirty_ = false;
  }

  thread_local std::vector<double> sa;
  auto concat = [&](std::span<const double> s, std::span<const double> a) -> std::span<const double> {
    sa.resize(s.size() + a.size());
    std::copy(s.begin(), s.end(), sa.begin());
    std::copy(a.begin(), a.end(), sa.begin() + s.size());
    return sa;
  };
  auto g_at = [&](std::span<const double> s, std::span<const double> a) {
    return mlp_forward_scalar(disc.g_spec, disc.g, concat(s, a));
  };

  // Canonical values of the candidate reward reduce, up to a batch constant
  // that Pearson ignores, to a combination of g evaluations only.
  std::vector<double> x(n);
  if (epic) {
    for (size_t e = 0; e < n; ++e) {
      const Transition& tr = eval_batch_[e];
      double acc = 0.0;
      for (const Transition& c : canon_.samples)
        acc += gamma * g_at(tr.s_next, c.a) - g_at(tr.s, c.a);
      x[e] = g_at(tr.s, tr.a) + acc / static_cast<double>(m);
    }
  } else {
    for (size_t e = 0; e < n; ++e) {
      const Transition& tr = eval_batch_[e];
      x[e] = disc.r_tilde(tr.s, tr.a, tr.s_next);
    }
  }

  double wsum = 0.0;
  for (double t : targets_) wsum += t;

  double term = 0.0;
  std::vector<double> total_gx(n, 0.0);
  std::vector<double> gx;
  last_measured_.assign(J, 0.0);
  for (size_t j = 0; j < J; ++j) {
    double dj;
    if (epic) {
      dj = pearson_distance_smoothed_grad(x, y_[j], gx);
    } else {
      gx.assign(n, 0.0);
      double acc = 0.0;
      for (size_t e = 0; e < n; ++e) {
        double diff = x[e] - y_[j][e];
        acc += diff * diff;
        gx[e] = 2.0 * diff / static_cast<double>(n);
      }
      dj = acc / static_cast<double>(n);
    }
    last_measured_[j] = dj;
    double coef;
    if (cfg_.mode == RegMode::TargetDistance) {
      double diff = targets_[j] - dj;
      term += diff * diff;
      coef = -2.0 * diff;
    } else {
      double w = wsum > 0.0 ? targets_[j] / wsum : 1.0 / static_cast<double>(J);
      term += w * dj;
      coef = w;
    }
    if (gg)
      for (size_t e = 0; e < n; ++e) total_gx[e] += coef * gx[e];
  }
  double value = cfg_.beta * term;
  if (!gg) return value;

  thread_local MlpCache gcache, hcache;
  std::vector<double> gy(1);
  auto acc_g = [&](std::span<const double> s, std::span<const double> a, double w) {
    if (w == 0.0) return;
    mlp_forward_scalar(disc.g_spec, disc.g, concat(s, a), &gcache);
    gy[0] = w;
    mlp_backward(disc.g_spec, disc.g, gcache, gy, *gg);
  };
  if (epic) {
    double inv_m = 1.0 / static_cast<double>(m);
    for (size_t e = 0; e < n; ++e) {
      double w = cfg_.beta * total_gx[e];
      if (w == 0.0) continue;
      const Transition& tr = eval_batch_[e];
      acc_g(tr.s, tr.a, w);
      for (const Transition& c : canon_.samples) {
        acc_g(tr.s_next, c.a, w * gamma * inv_m);
        acc_g(tr.s, c.a, -w * inv_m);
      }
    }
  } else {
    auto acc_h = [&](std::span<const double> s, double w) {
      if (w == 0.0) return;
      mlp_forward_scalar(disc.h_spec, disc.h, s, &hcache);
      gy[0] = w;
      mlp_backward(disc.h_spec, disc.h, hcache, gy, *gh);
    };
    for (size_t e = 0; e < n; ++e) {
      double w = cfg_.beta * total_gx[e];
      if (w == 0.0) continue;
      const Transition& tr = eval_batch_[e];
      acc_g(tr.s, tr.a, w);
      acc_h(tr.s_next, gamma * w);
      acc_h(tr.s, -w);
    }
  }
  return value;
}

double regularized_disc_loss(const Discriminator& disc, const DiscBatch& batch,
                             DiscRegularizer& reg) {
  return disc_loss(disc, batch) + reg.eval(disc, nullptr, nullptr);
}

double regret_diagnostic(const RewardHandle& r, const std::vector<RewardHandle>& components,
                         std::span<const double> omega, const MoEnv& env,
                         const RegularizerConfig& cfg, uint64_t seed,
                         const TransitionSampler* eval_sampler) {
  if (components.size() != omega.size())
    throw std::invalid_argument("regret_diagnostic: omega/components size mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < components.size(); ++i)
    acc += omega[i] * measure_distance(r, components[i], env, cfg, seed, eval_sampler).value;
  return acc;
}

long recursive_budget(const ParirlConfig& cfg) {
  if (cfg.recursive_budget > 0) return cfg.recursive_budget;
  if (cfg.steps < 2) return 0;
  long by_steps = cfg.step1_budget / (2 * cfg.steps - 2);
  long floor30 = cfg.step1_budget / 30;
  return std::max(by_steps, floor30);
}

ParirlResult run_parirl(const std::vector<Dataset>& experts, const MoEnv& env,
                        const ParirlConfig& cfg, uint64_t seed, const BranchCallback& on_branch) {
  const int M = static_cast<int>(experts.size());
  if (M < 2) throw std::invalid_argument("run_parirl: need at least 2 expert datasets");
  if (cfg.steps < 1) throw std::invalid_argument("run_parirl: steps must be >= 1");
  for (const Dataset& d : experts)
    if (d.records.empty()) throw std::invalid_argument("run_parirl: empty expert dataset");

  ParirlResult result;
  std::vector<RewardHandle> rewards(M);
  std::vector<Dataset> datasets(M);
  std::vector<ParetoPolicyRecord> branch(M);

  auto branch_id = [](int g, int i) {
    return "g" + std::to_string(g) + "-b" + std::to_string(i);
  };

  for (int i = 0; i < M; ++i) {
    AirlTrainer t(env, cfg.airl, derive_seed(seed, "step1", static_cast<uint64_t>(i)));
    MixtureSampler expert({&experts[i]});
    StepDiagnostics diag;
    diag.step = 1;
    diag.branch = i;
    t.train(expert, cfg.step1_budget, derive_seed(seed, "step1-train", static_cast<uint64_t>(i)),
            nullptr, [&](const AirlUpdateInfo& info) { diag.env_steps = info.env_steps; });
    ParetoPolicyRecord rec{1, i, branch_id(1, i), t.gen.policy, t.gen.value, t.disc};
    Dataset ds = collect_dataset(rec.policy, env, cfg.dataset_episodes,
                                 derive_seed(seed, "dataset", static_cast<uint64_t>(i)), rec.id,
                                 kDemoNoiseScale);
    rewards[i] = reward_from_disc(rec.id, rec.disc);
    datasets[i] = ds;
    branch[i] = rec;
    result.pareto_set.push_back(rec);
    result.diagnostics.push_back(diag);
    if (on_branch) on_branch(rec, ds, diag);
  }

  const long rec_budget = recursive_budget(cfg);
  for (int g = 2; g <= cfg.steps; ++g) {
    std::vector<RewardHandle> prev_rewards = rewards;
    std::vector<Dataset> prev_datasets = datasets;
    std::vector<const Dataset*> prev_ptrs;
    for (const Dataset& d : prev_datasets) prev_ptrs.push_back(&d);
    TransitionSampler pooled = TransitionSampler::pooled(prev_ptrs);

    std::vector<RewardHandle> next_rewards(M);
    std::vector<Dataset> next_datasets(M);
    std::vector<ParetoPolicyRecord> next_branch(M);
    for (int i = 0; i < M; ++i) {
      uint64_t tag = static_cast<uint64_t>(g) * 64 + static_cast<uint64_t>(i);
      StepDiagnostics diag;
      diag.step = g;
      diag.branch = i;

      diag.budget = target_budget(prev_rewards, env, cfg.reg, derive_seed(seed, "budget", tag),
                                  &pooled);
      double c = cfg.small_c > 0.0 ? cfg.small_c : small_side_constant(diag.budget);
      diag.targets = split_budget(diag.budget, i, M, c);

      AirlConfig fork_cfg = cfg.airl;
      fork_cfg.bc_steps = 0;  // the forked policy is already on-manifold
      AirlTrainer t(env, fork_cfg, derive_seed(seed, "fork", tag));
      t.gen.policy = branch[i].policy;
      t.gen.value = branch[i].value;
      t.disc = branch[i].disc;
      // Imitation shrinks the action noise; forks need it back so the shifted
      // reward can actually move the policy.
      for (double& ls : t.gen.policy.log_std) ls = std::max(ls, -0.5);

      diag.fork_distance =
          measure_distance(reward_from_disc("fork", t.disc), prev_rewards[i], env, cfg.reg,
                           derive_seed(seed, "fork-dist", tag), &pooled)
              .value;

      DiscRegularizer reg(env, prev_rewards, diag.targets, cfg.reg, pooled,
                          derive_seed(seed, "reg", tag));
      AirlTrainer::RegHook hook = [&reg](const Discriminator& d, ParamVector& gg,
                                         ParamVector& gh) { return reg(d, gg, gh); };
      MixtureSampler expert(prev_ptrs);  // previous-step data, equal set weights
      t.train(expert, rec_budget, derive_seed(seed, "rs-train", tag), hook,
              [&](const AirlUpdateInfo& info) { diag.env_steps = info.env_steps; });

      ParetoPolicyRecord rec{g, i, branch_id(g, i), t.gen.policy, t.gen.value, t.disc};
      RewardHandle handle = reward_from_disc(rec.id, rec.disc);
      diag.measured.resize(M);
      for (int j = 0; j < M; ++j)
        diag.measured[j] = measure_distance(handle, prev_rewards[j], env, cfg.reg,
                                            derive_seed(seed, "measure", tag), &pooled)
                               .value;
      diag.reg_term = cfg.reg.mode == RegMode::TargetDistance
                          ? regularization_term(diag.targets, diag.measured)
                          : weighted_sum_term(diag.targets, diag.measured);
      std::vector<double> omega(M, 1.0 / static_cast<double>(M));
      diag.regret = regret_diagnostic(handle, prev_rewards, omega, env, cfg.reg,
                                      derive_seed(seed, "regret", tag), &pooled);

      Dataset ds = collect_dataset(rec.policy, env, cfg.dataset_episodes,
                                   derive_seed(seed, "dataset", tag), rec.id, kDemoNoiseScale);
      next_rewards[i] = std::move(handle);
      next_datasets[i] = std::move(ds);
      next_branch[i] = rec;
      result.pareto_set.push_back(rec);
      result.diagnostics.push_back(diag);
      if (on_branch) on_branch(rec, next_datasets[i], diag);
    }
    rewards = std::move(next_rewards);
    datasets = std::move(next_datasets);
    branch = std::move(next_branch);
  }

  result.final_datasets = std::move(datasets);
  return result;
}

}  // namespace parirl
