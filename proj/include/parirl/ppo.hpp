#pragma once

#include <functional>

#include "parirl/optim.hpp"
#include "parirl/rollout.hpp"

namespace parirl {

struct PpoConfig {
  double lr = 3e-4;
  int epochs = 50;
  int batch_steps = 16384;
  int minibatches = 4;
  double clip = 0.1;
  double max_grad_norm = 0.5;
  double gae_lambda = 0.95;
  double entropy_coef = 0.01;
  double vf_coef = 0.5;
  std::vector<int> actor_hidden = {64, 64};
  std::vector<int> value_hidden = {64, 64};
};

struct PpoDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

class PpoTrainer {
 public:
  PpoTrainer(const MoEnv& env, PpoConfig cfg, uint64_t seed);

  // One full PPO update over the buffer: GAE, advantage normalization, then
  // `epochs` passes of `minibatches` clipped-surrogate steps.
  PpoDiagnostics update(RolloutBuffer& buf);

  const PpoConfig& config() const { return cfg_; }

  GaussianPolicy policy;
  ValueNet value;

 private:
  PpoConfig cfg_;
  double gamma_;
  Adam opt_policy_;  // actor params followed by log_std
  Adam opt_value_;
  Rng shuffle_rng_;
};

// Runs collect/update cycles until total_steps env steps observed. on_update
// fires after each update with the steps consumed so far.
void train_ppo(PpoTrainer& trainer, const MoEnv& env, const RewardSource& reward_source,
               long total_steps, uint64_t seed,
               const std::function<void(long, const RolloutBuffer&, const PpoDiagnostics&)>&
                   on_update = nullptr);

}  // namespace parirl
