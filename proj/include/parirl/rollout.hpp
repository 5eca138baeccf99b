#pragma once

#include <functional>
#include <span>
#include <vector>

#include "parirl/envs.hpp"
#include "parirl/policy.hpp"

namespace parirl {

// Scalar training reward for one transition. env_reward carries the native
// vector reward so ground-truth sources don't recompute dynamics.
using RewardSource = std::function<double(
    std::span<const double> s, std::span<const double> a, std::span<const double> s_next,
    double log_pi, std::span<const double> env_reward)>;

struct RolloutBuffer {
  int n = 0;
  int state_dim = 0, action_dim = 0, n_objectives = 0;
  std::vector<double> s, a, s_next;    // flattened, row per step
  std::vector<double> reward;          // scalar training reward
  std::vector<double> env_reward;      // native vector reward, n x m
  std::vector<double> logp, value;
  std::vector<unsigned char> done;     // episode ended after this step
  std::vector<double> adv, ret;
  double bootstrap_value = 0.0;        // V(s_n) when the buffer ends mid-episode

  std::span<const double> state(int i) const { return {s.data() + i * state_dim, (size_t)state_dim}; }
  std::span<const double> action(int i) const { return {a.data() + i * action_dim, (size_t)action_dim}; }
  std::span<const double> next_state(int i) const { return {s_next.data() + i * state_dim, (size_t)state_dim}; }
};

// Exactly n_steps transitions across as many episodes as needed. Actions are
// sampled, clamped to the action bounds, and stored clamped together with
// their log-density, so collection and update see the same numbers.
RolloutBuffer collect_rollout(const GaussianPolicy& policy, const ValueNet& value,
                              const MoEnv& env, const RewardSource& reward_source,
                              int n_steps, uint64_t seed);

// Standard GAE over the buffer in place (raw, unnormalized); returns-to-go in ret.
void compute_gae(RolloutBuffer& buf, double gamma, double lam);

// Mean undiscounted per-objective return over the completed episodes in the buffer.
std::vector<double> mean_episode_returns(const RolloutBuffer& buf);

// Demonstrations are recorded at a fraction of the policy's exploration
// noise: enough spread to cover nearby states, little enough that the data
// shows the intended behavior rather than the exploration.
constexpr double kDemoNoiseScale = 0.25;

// Full episodes under sampled (stochastic) actions, stored clamped. The
// per-dimension action noise is scaled by noise_scale.
Dataset collect_dataset(const GaussianPolicy& policy, const MoEnv& env, int episodes,
                        uint64_t seed, std::string policy_id, double noise_scale = 1.0);

}  // namespace parirl
