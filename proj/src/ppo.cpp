#include "parirl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace parirl {

PpoTrainer::PpoTrainer(const MoEnv& env, PpoConfig cfg, uint64_t seed)
    : policy(GaussianPolicy::make(env.spec().state_dim, env.spec().action_dim, cfg.actor_hidden,
                                  derive_seed(seed, "actor"))),
      value(ValueNet::make(env.spec().state_dim, cfg.value_hidden, derive_seed(seed, "value"))),
      cfg_(cfg),
      gamma_(env.spec().gamma),
      opt_policy_(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8, cfg.max_grad_norm},
                  param_count(policy.actor_spec) + env.spec().action_dim, "ppo-policy"),
      opt_value_(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8, cfg.max_grad_norm},
                 param_count(value.spec), "ppo-value"),
      shuffle_rng_(derive_seed(seed, "shuffle")) {}

PpoDiagnostics PpoTrainer::update(RolloutBuffer& buf) {
  if (buf.n == 0) throw std::invalid_argument("ppo update: empty buffer");
  compute_gae(buf, gamma_, cfg_.gae_lambda);

  // Advantage normalization once per update.
  double mean = std::accumulate(buf.adv.begin(), buf.adv.end(), 0.0) / buf.n;
  double var = 0.0;
  for (double v : buf.adv) var += (v - mean) * (v - mean);
  double sd = std::sqrt(var / buf.n) + 1e-8;
  std::vector<double> adv(buf.n);
  for (int i = 0; i < buf.n; ++i) adv[i] = (buf.adv[i] - mean) / sd;

  int na = policy.action_dim();
  size_t n_actor = policy.actor.size();
  std::vector<double> pol_params(n_actor + na), pol_grad(n_actor + na);
  std::vector<double> val_grad(value.params.size());
  std::vector<int> idx(buf.n);
  std::iota(idx.begin(), idx.end(), 0);

  PpoDiagnostics diag;
  long n_terms = 0;
  MlpCache vcache;
  std::vector<double> vout(1), gv(1);

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    for (int i = buf.n - 1; i > 0; --i) std::swap(idx[i], idx[shuffle_rng_.uniform_int(i + 1)]);
    int mb_count = std::max(1, cfg_.minibatches);
    for (int mb = 0; mb < mb_count; ++mb) {
      int lo = static_cast<int>(static_cast<long>(buf.n) * mb / mb_count);
      int hi = static_cast<int>(static_cast<long>(buf.n) * (mb + 1) / mb_count);
      if (hi <= lo) continue;
      double inv = 1.0 / (hi - lo);

      std::fill(pol_grad.begin(), pol_grad.end(), 0.0);
      std::fill(val_grad.begin(), val_grad.end(), 0.0);
      ParamVector gactor(n_actor, 0.0);
      std::vector<double> gls(na, 0.0);

      double pol_loss = 0.0, val_loss = 0.0, kl = 0.0;
      int clipped = 0;

      for (int k = lo; k < hi; ++k) {
        int i = idx[k];
        double A = adv[i];

        // Policy side: clipped surrogate. The clipped branch has zero gradient.
        double lp = policy.log_prob(buf.state(i), buf.action(i));
        double ratio = std::exp(lp - buf.logp[i]);
        double rc = clamp(ratio, 1.0 - cfg_.clip, 1.0 + cfg_.clip);
        double s1 = ratio * A, s2 = rc * A;
        bool clip_active = s1 > s2;
        pol_loss += -std::min(s1, s2);
        kl += (ratio - 1.0) - (lp - buf.logp[i]);
        if (std::fabs(ratio - 1.0) > cfg_.clip) ++clipped;
        if (!clip_active) {
          double w = -A * ratio * inv;
          policy.log_prob_grad(buf.state(i), buf.action(i), w, gactor, gls);
        }

        // Value side: clipped value loss; the clipped branch has zero gradient.
        mlp_forward(value.spec, value.params, buf.state(i), vout, &vcache);
        double v = vout[0];
        double vc = buf.value[i] + clamp(v - buf.value[i], -cfg_.clip, cfg_.clip);
        double l1 = (v - buf.ret[i]) * (v - buf.ret[i]);
        double l2 = (vc - buf.ret[i]) * (vc - buf.ret[i]);
        val_loss += 0.5 * cfg_.vf_coef * std::max(l1, l2);
        if (l1 >= l2) {
          gv[0] = cfg_.vf_coef * (v - buf.ret[i]) * inv;
          mlp_backward(value.spec, value.params, vcache, gv, val_grad);
        }
      }

      // Entropy bonus depends only on log_std.
      for (int d = 0; d < na; ++d) gls[d] += -cfg_.entropy_coef;

      std::copy(policy.actor.begin(), policy.actor.end(), pol_params.begin());
      std::copy(policy.log_std.begin(), policy.log_std.end(), pol_params.begin() + n_actor);
      std::copy(gactor.begin(), gactor.end(), pol_grad.begin());
      std::copy(gls.begin(), gls.end(), pol_grad.begin() + n_actor);
      opt_policy_.step(pol_params, pol_grad);
      std::copy(pol_params.begin(), pol_params.begin() + n_actor, policy.actor.begin());
      std::copy(pol_params.begin() + n_actor, pol_params.end(), policy.log_std.begin());
      policy.clamp_log_std();

      opt_value_.step(value.params, val_grad);

      diag.policy_loss += pol_loss * inv;
      diag.value_loss += val_loss * inv;
      diag.clip_fraction += static_cast<double>(clipped) * inv;
      diag.approx_kl += kl * inv;
      ++n_terms;
    }
  }
  if (n_terms > 0) {
    diag.policy_loss /= n_terms;
    diag.value_loss /= n_terms;
    diag.clip_fraction /= n_terms;
    diag.approx_kl /= n_terms;
  }
  diag.entropy = policy.entropy();
  if (!std::isfinite(diag.policy_loss) || !std::isfinite(diag.value_loss))
    throw std::runtime_error(
        "ppo update: non-finite loss (policy=" + std::to_string(diag.policy_loss) +
        " value=" + std::to_string(diag.value_loss) +
        " kl=" + std::to_string(diag.approx_kl) + ")");
  return diag;
}

void train_ppo(PpoTrainer& trainer, const MoEnv& env, const RewardSource& reward_source,
               long total_steps, uint64_t seed,
               const std::function<void(long, const RolloutBuffer&, const PpoDiagnostics&)>&
                   on_update) {
  long done = 0;
  uint64_t update_idx = 0;
  while (done < total_steps) {
    int n = static_cast<int>(std::min<long>(trainer.config().batch_steps, total_steps - done));
    n = std::max(n, env.spec().horizon);
    RolloutBuffer buf = collect_rollout(trainer.policy, trainer.value, env, reward_source, n,
                                        derive_seed(seed, "collect", update_idx));
    PpoDiagnostics diag = trainer.update(buf);
    done += n;
    ++update_idx;
    if (on_update) on_update(done, buf, diag);
  }
}

}  // namespace parirl
