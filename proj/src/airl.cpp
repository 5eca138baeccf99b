#include "parirl/airl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace parirl {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double softplus(double z) {
  if (z > 30.0) return z;
  if (z < -30.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

std::vector<double>& concat_sa(std::span<const double> s, std::span<const double> a) {
  thread_local std::vector<double> sa;
  sa.resize(s.size() + a.size());
  std::copy(s.begin(), s.end(), sa.begin());
  std::copy(a.begin(), a.end(), sa.begin() + s.size());
  return sa;
}

}  // namespace

Discriminator Discriminator::make(int state_dim, int action_dim, double gamma, uint64_t seed,
                                  std::vector<int> g_hidden, std::vector<int> h_hidden) {
  Discriminator d;
  d.g_spec = {state_dim + action_dim, std::move(g_hidden), 1, Act::Relu};
  d.h_spec = {state_dim, std::move(h_hidden), 1, Act::Relu};
  Rng rg(derive_seed(seed, "disc-g", 0));
  Rng rh(derive_seed(seed, "disc-h", 0));
  // Small heads keep initial logits near zero even on large unnormalized
  // states; a full-gain init can trip the divergence detector before the
  // first optimizer step.
  d.g = init_params(d.g_spec, rg, 0.1);
  d.h = init_params(d.h_spec, rh, 0.1);
  d.gamma = gamma;
  return d;
}

double Discriminator::r_tilde(std::span<const double> s, std::span<const double> a,
                              std::span<const double> s_next) const {
  double gv = mlp_forward_scalar(g_spec, g, concat_sa(s, a));
  double hn = mlp_forward_scalar(h_spec, h, s_next);
  double hs = mlp_forward_scalar(h_spec, h, s);
  return gv + gamma * hn - hs;
}

double disc_prob(const Discriminator& disc, const Transition& tr, double log_pi) {
  double p = sigmoid(disc.r_tilde(tr.s, tr.a, tr.s_next) - log_pi);
  return std::clamp(p, 1e-7, 1.0 - 1e-7);
}

double gen_reward(const Discriminator& disc, std::span<const double> s, std::span<const double> a,
                  std::span<const double> s_next, double log_pi) {
  // log D - log(1-D) collapses to the logit itself.
  return disc.r_tilde(s, a, s_next) - log_pi;
}

double gen_reward(const Discriminator& disc, const Transition& tr, double log_pi) {
  return gen_reward(disc, tr.s, tr.a, tr.s_next, log_pi);
}

namespace {

// Shared loss/grad core. gg/gh may be null for value-only evaluation.
double disc_loss_core(const Discriminator& disc, const DiscBatch& batch, ParamVector* gg,
                      ParamVector* gh) {
  if (batch.policy_side.size() != batch.policy_logp.size() ||
      batch.expert_side.size() != batch.expert_logp.size())
    throw std::invalid_argument("disc_loss: transitions and log-probs disagree in length");
  if (batch.policy_side.empty() || batch.expert_side.empty())
    throw std::invalid_argument("disc_loss: both sides must be non-empty");

  thread_local MlpCache gcache, hcache;
  double loss = 0.0;
  std::vector<double> gy(1);
  auto accumulate = [&](const Transition& tr, double log_pi, bool expert, double inv_n) {
    double z = disc.r_tilde(tr.s, tr.a, tr.s_next) - log_pi;
    double dz;
    if (expert) {
      // -log D = softplus(-z)
      loss += softplus(-z) * inv_n;
      dz = (sigmoid(z) - 1.0) * inv_n;
    } else {
      // -log(1-D) = softplus(z)
      loss += softplus(z) * inv_n;
      dz = sigmoid(z) * inv_n;
    }
    if (!gg) return;
    auto& sa = concat_sa(tr.s, tr.a);
    mlp_forward_scalar(disc.g_spec, disc.g, sa, &gcache);
    gy[0] = dz;
    mlp_backward(disc.g_spec, disc.g, gcache, gy, *gg);
    mlp_forward_scalar(disc.h_spec, disc.h, tr.s_next, &hcache);
    gy[0] = disc.gamma * dz;
    mlp_backward(disc.h_spec, disc.h, hcache, gy, *gh);
    mlp_forward_scalar(disc.h_spec, disc.h, tr.s, &hcache);
    gy[0] = -dz;
    mlp_backward(disc.h_spec, disc.h, hcache, gy, *gh);
  };

  double inv_pol = 1.0 / static_cast<double>(batch.policy_side.size());
  for (size_t i = 0; i < batch.policy_side.size(); ++i)
    accumulate(batch.policy_side[i], batch.policy_logp[i], false, inv_pol);
  double inv_exp = 1.0 / static_cast<double>(batch.expert_side.size());
  for (size_t i = 0; i < batch.expert_side.size(); ++i)
    accumulate(batch.expert_side[i], batch.expert_logp[i], true, inv_exp);
  return loss;
}

}  // namespace

double disc_loss(const Discriminator& disc, const DiscBatch& batch) {
  return disc_loss_core(disc, batch, nullptr, nullptr);
}

double disc_loss_grad(const Discriminator& disc, const DiscBatch& batch, ParamVector& gg,
                      ParamVector& gh) {
  return disc_loss_core(disc, batch, &gg, &gh);
}

MixtureSampler::MixtureSampler(std::vector<const Dataset*> sets, std::vector<double> weights)
    : sets_(std::move(sets)) {
  if (sets_.empty()) throw std::invalid_argument("MixtureSampler: no datasets");
  if (weights.empty()) weights.assign(sets_.size(), 1.0);
  if (weights.size() != sets_.size())
    throw std::invalid_argument("MixtureSampler: weight count mismatch");
  double total_w = 0.0;
  for (size_t i = 0; i < sets_.size(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("MixtureSampler: negative weight");
    if (weights[i] > 0.0 && sets_[i]->records.empty())
      throw std::invalid_argument("MixtureSampler: weighted dataset is empty");
    total_w += weights[i];
    total_ += sets_[i]->records.size();
  }
  if (total_w <= 0.0) throw std::invalid_argument("MixtureSampler: weights sum to zero");
  cum_.resize(weights.size());
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i] / total_w;
    cum_[i] = acc;
  }
  cum_.back() = 1.0;
}

const Transition& MixtureSampler::sample(Rng& rng) const {
  double u = rng.uniform();
  size_t k = 0;
  while (k + 1 < cum_.size() && u >= cum_[k]) ++k;
  const auto& recs = sets_[k]->records;
  return recs[rng.uniform_int(static_cast<int>(recs.size()))];
}

void bc_pretrain(GaussianPolicy& policy, const MixtureSampler& data, int steps, uint64_t seed,
                 double lr, int batch) {
  if (steps <= 0) return;
  size_t n_actor = policy.actor.size();
  Adam opt(AdamConfig{lr, 0.9, 0.999, 1e-8, 0.5}, n_actor + policy.log_std.size(), "bc");
  Rng rng(derive_seed(seed, "bc-batch", 0));
  std::vector<double> params(n_actor + policy.log_std.size());
  std::vector<double> grad(params.size());
  ParamVector gactor(n_actor);
  std::vector<double> glog_std(policy.log_std.size());
  for (int step = 0; step < steps; ++step) {
    std::fill(gactor.begin(), gactor.end(), 0.0);
    std::fill(glog_std.begin(), glog_std.end(), 0.0);
    double w = -1.0 / batch;  // minimize negative log-likelihood
    for (int b = 0; b < batch; ++b) {
      const Transition& tr = data.sample(rng);
      policy.log_prob_grad(tr.s, tr.a, w, gactor, glog_std);
    }
    std::copy(policy.actor.begin(), policy.actor.end(), params.begin());
    std::copy(policy.log_std.begin(), policy.log_std.end(), params.begin() + n_actor);
    std::copy(gactor.begin(), gactor.end(), grad.begin());
    std::copy(glog_std.begin(), glog_std.end(), grad.begin() + n_actor);
    opt.step(params, grad);
    std::copy(params.begin(), params.begin() + n_actor, policy.actor.begin());
    std::copy(params.begin() + n_actor, params.end(), policy.log_std.begin());
    policy.clamp_log_std();
  }
}

AirlTrainer::AirlTrainer(const MoEnv& env_, AirlConfig cfg_, uint64_t seed)
    : env(env_),
      cfg(std::move(cfg_)),
      gen(env_, cfg.ppo, derive_seed(seed, "gen", 0)),
      disc(Discriminator::make(env_.spec().state_dim, env_.spec().action_dim, env_.spec().gamma,
                               derive_seed(seed, "disc", 0))),
      opt_disc_(AdamConfig{cfg.disc_lr, 0.9, 0.999, 1e-8, cfg.ppo.max_grad_norm},
                param_count(disc.g_spec) + param_count(disc.h_spec), "disc") {}

double AirlTrainer::disc_step(const DiscBatch& batch, const RegHook& reg, double* reg_value) {
  thread_local ParamVector gg, gh;
  gg.assign(disc.g.size(), 0.0);
  gh.assign(disc.h.size(), 0.0);
  double loss = disc_loss_grad(disc, batch, gg, gh);
  double rv = 0.0;
  if (reg) rv = reg(disc, gg, gh);
  if (reg_value) *reg_value = rv;

  if (loss > cfg.divergence_loss_threshold) {
    if (++diverged_streak_ >= cfg.divergence_patience)
      throw DivergenceError("discriminator diverged: loss " + std::to_string(loss) + " above " +
                            std::to_string(cfg.divergence_loss_threshold) + " for " +
                            std::to_string(diverged_streak_) + " consecutive updates");
  } else {
    diverged_streak_ = 0;
  }

  std::vector<double> params(disc.g.size() + disc.h.size());
  std::vector<double> grad(params.size());
  std::copy(disc.g.begin(), disc.g.end(), params.begin());
  std::copy(disc.h.begin(), disc.h.end(), params.begin() + disc.g.size());
  std::copy(gg.begin(), gg.end(), grad.begin());
  std::copy(gh.begin(), gh.end(), grad.begin() + disc.g.size());
  opt_disc_.step(params, grad);
  std::copy(params.begin(), params.begin() + disc.g.size(), disc.g.begin());
  std::copy(params.begin() + disc.g.size(), params.end(), disc.h.begin());
  return loss;
}

void AirlTrainer::train(const MixtureSampler& expert, long budget_steps, uint64_t seed,
                        const RegHook& reg,
                        const std::function<void(const AirlUpdateInfo&)>& on_update) {
  if (expert.total_records() == 0) throw std::invalid_argument("AirlTrainer: empty expert data");
  bc_pretrain(gen.policy, expert, cfg.bc_steps, derive_seed(seed, "bc", 0));

  RewardSource source = [this](std::span<const double> s, std::span<const double> a,
                               std::span<const double> s_next, double log_pi,
                               std::span<const double>) {
    return gen_reward(disc, s, a, s_next, log_pi);
  };

  long batches_per_epoch =
      (static_cast<long>(expert.total_records()) + cfg.disc_batch - 1) / cfg.disc_batch;
  Rng batch_rng(derive_seed(seed, "disc-batch", 0));
  DiscBatch batch;
  batch.policy_side.resize(cfg.disc_batch);
  batch.policy_logp.resize(cfg.disc_batch);
  batch.expert_side.resize(cfg.disc_batch);
  batch.expert_logp.resize(cfg.disc_batch);

  long done = 0;
  uint64_t update_idx = 0;
  while (done < budget_steps) {
    int n = static_cast<int>(std::min<long>(cfg.ppo.batch_steps, budget_steps - done));
    n = std::max(n, env.spec().horizon);
    RolloutBuffer buf = collect_rollout(gen.policy, gen.value, env, source, n,
                                        derive_seed(seed, "collect", update_idx));

    double loss_sum = 0.0, reg_sum = 0.0;
    long n_batches = 0;
    for (int epoch = 0; epoch < cfg.disc_epochs_per_update; ++epoch) {
      for (long bi = 0; bi < batches_per_epoch; ++bi) {
        for (int k = 0; k < cfg.disc_batch; ++k) {
          const Transition& ex = expert.sample(batch_rng);
          batch.expert_side[k] = ex;
          batch.expert_logp[k] = gen.policy.log_prob(ex.s, ex.a);
          int j = batch_rng.uniform_int(buf.n);
          Transition& pt = batch.policy_side[k];
          pt.s.assign(buf.state(j).begin(), buf.state(j).end());
          pt.a.assign(buf.action(j).begin(), buf.action(j).end());
          pt.s_next.assign(buf.next_state(j).begin(), buf.next_state(j).end());
          batch.policy_logp[k] = buf.logp[j];
        }
        double rv = 0.0;
        loss_sum += disc_step(batch, reg, &rv);
        reg_sum += rv;
        ++n_batches;
      }
    }

    // The generator trains against the freshly updated discriminator.
    for (int i = 0; i < buf.n; ++i)
      buf.reward[i] = gen_reward(disc, buf.state(i), buf.action(i), buf.next_state(i), buf.logp[i]);

    PpoDiagnostics diag = gen.update(buf);
    done += n;
    ++update_idx;
    if (on_update) {
      AirlUpdateInfo info;
      info.env_steps = done;
      info.disc_loss = n_batches ? loss_sum / static_cast<double>(n_batches) : 0.0;
      info.reg_term = n_batches ? reg_sum / static_cast<double>(n_batches) : 0.0;
      info.mean_returns = mean_episode_returns(buf);
      info.ppo = diag;
      on_update(info);
    }
  }
}

}  // namespace parirl
