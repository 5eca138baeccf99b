#include "parirl/rollout.hpp"

#include <cmath>
#include <stdexcept>

namespace parirl {

RolloutBuffer collect_rollout(const GaussianPolicy& policy, const ValueNet& value,
                              const MoEnv& env, const RewardSource& reward_source,
                              int n_steps, uint64_t seed) {
  const EnvSpec& es = env.spec();
  if (n_steps < es.horizon)
    throw std::invalid_argument("collect_rollout: n_steps below one horizon");

  RolloutBuffer buf;
  buf.n = n_steps;
  buf.state_dim = es.state_dim;
  buf.action_dim = es.action_dim;
  buf.n_objectives = es.n_objectives;
  buf.s.resize(static_cast<size_t>(n_steps) * es.state_dim);
  buf.a.resize(static_cast<size_t>(n_steps) * es.action_dim);
  buf.s_next.resize(static_cast<size_t>(n_steps) * es.state_dim);
  buf.reward.resize(n_steps);
  buf.env_reward.resize(static_cast<size_t>(n_steps) * es.n_objectives);
  buf.logp.resize(n_steps);
  buf.value.resize(n_steps);
  buf.done.resize(n_steps);

  Rng rng(seed);
  EnvState state = env.reset(seed);
  std::vector<double> act(es.action_dim);

  for (int i = 0; i < n_steps; ++i) {
    policy.sample_action(state.s, act, rng);
    for (int d = 0; d < es.action_dim; ++d) act[d] = clamp(act[d], es.a_lo[d], es.a_hi[d]);

    auto out = env.step(state, act);
    double lp = policy.log_prob(state.s, act);
    double r = reward_source(state.s, act, out.next.s, lp, out.reward);
    if (!std::isfinite(r))
      throw std::runtime_error("collect_rollout: reward source returned non-finite value");

    std::copy(state.s.begin(), state.s.end(), buf.s.begin() + static_cast<size_t>(i) * es.state_dim);
    std::copy(act.begin(), act.end(), buf.a.begin() + static_cast<size_t>(i) * es.action_dim);
    std::copy(out.next.s.begin(), out.next.s.end(),
              buf.s_next.begin() + static_cast<size_t>(i) * es.state_dim);
    std::copy(out.reward.begin(), out.reward.end(),
              buf.env_reward.begin() + static_cast<size_t>(i) * es.n_objectives);
    buf.reward[i] = r;
    buf.logp[i] = lp;
    buf.value[i] = value.value(state.s);
    buf.done[i] = out.done ? 1 : 0;

    state = out.done ? env.reset(seed) : out.next;
  }
  buf.bootstrap_value = buf.done[n_steps - 1] ? 0.0 : value.value(state.s);
  return buf;
}

void compute_gae(RolloutBuffer& buf, double gamma, double lam) {
  buf.adv.assign(buf.n, 0.0);
  buf.ret.assign(buf.n, 0.0);
  double gae = 0.0;
  for (int t = buf.n - 1; t >= 0; --t) {
    double next_v = buf.done[t] ? 0.0 : (t + 1 < buf.n ? buf.value[t + 1] : buf.bootstrap_value);
    double nonterminal = buf.done[t] ? 0.0 : 1.0;
    double delta = buf.reward[t] + gamma * next_v - buf.value[t];
    gae = delta + gamma * lam * nonterminal * gae;
    buf.adv[t] = gae;
    buf.ret[t] = gae + buf.value[t];
  }
}

std::vector<double> mean_episode_returns(const RolloutBuffer& buf) {
  std::vector<double> total(buf.n_objectives, 0.0), episode(buf.n_objectives, 0.0);
  int episodes = 0;
  for (int i = 0; i < buf.n; ++i) {
    for (int j = 0; j < buf.n_objectives; ++j)
      episode[j] += buf.env_reward[static_cast<size_t>(i) * buf.n_objectives + j];
    if (buf.done[i]) {
      for (int j = 0; j < buf.n_objectives; ++j) total[j] += episode[j];
      episode.assign(buf.n_objectives, 0.0);
      ++episodes;
    }
  }
  if (episodes == 0) return episode;  // partial episode fallback
  for (double& v : total) v /= episodes;
  return total;
}

Dataset collect_dataset(const GaussianPolicy& policy, const MoEnv& env, int episodes,
                        uint64_t seed, std::string policy_id, double noise_scale) {
  if (episodes < 1) throw std::invalid_argument("collect_dataset: episodes must be >= 1");
  if (noise_scale < 0.0) throw std::invalid_argument("collect_dataset: negative noise_scale");
  const EnvSpec& es = env.spec();
  Dataset ds;
  ds.env_id = es.id;
  ds.policy_id = std::move(policy_id);
  ds.seed = seed;
  ds.t.reserve(static_cast<size_t>(episodes) * es.horizon);
  ds.records.reserve(static_cast<size_t>(episodes) * es.horizon);

  Rng rng(seed);
  std::vector<double> act(es.action_dim);
  for (int ep = 0; ep < episodes; ++ep) {
    EnvState state = env.reset(seed);
    bool done = false;
    while (!done) {
      policy.mean_action(state.s, act);
      for (int d = 0; d < es.action_dim; ++d) {
        act[d] += noise_scale * std::exp(policy.log_std[d]) * rng.normal();
        act[d] = clamp(act[d], es.a_lo[d], es.a_hi[d]);
      }
      auto out = env.step(state, act);
      ds.t.push_back(state.t);
      ds.records.push_back({state.s, act, out.next.s});
      done = out.done;
      state = out.next;
    }
  }
  return ds;
}

}  // namespace parirl
