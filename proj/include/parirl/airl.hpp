#pragma once

#include <functional>

#include "parirl/optim.hpp"
#include "parirl/ppo.hpp"

namespace parirl {

// AIRL discriminator: D(s,a,s') = sigma(r_tilde - log pi) with
// r_tilde(s,a,s') = g(s,a) + gamma*h(s') - h(s).
struct Discriminator {
  MlpSpec g_spec;  // reward net over (s,a)
  ParamVector g;
  MlpSpec h_spec;  // shaping net over s
  ParamVector h;
  double gamma = 0.99;

  static Discriminator make(int state_dim, int action_dim, double gamma, uint64_t seed,
                            std::vector<int> g_hidden = {32}, std::vector<int> h_hidden = {32, 32});

  double r_tilde(std::span<const double> s, std::span<const double> a,
                 std::span<const double> s_next) const;
};

struct DiscBatch {
  std::vector<Transition> policy_side;
  std::vector<double> policy_logp;
  std::vector<Transition> expert_side;
  std::vector<double> expert_logp;  // under the current generator
};

double disc_prob(const Discriminator& disc, const Transition& tr, double log_pi);
double disc_loss(const Discriminator& disc, const DiscBatch& batch);
// Accumulates d(loss)/d(g params) and d(loss)/d(h params); returns the loss.
double disc_loss_grad(const Discriminator& disc, const DiscBatch& batch, ParamVector& gg,
                      ParamVector& gh);
// log D - log(1-D), algebraically r_tilde - log pi.
double gen_reward(const Discriminator& disc, std::span<const double> s, std::span<const double> a,
                  std::span<const double> s_next, double log_pi);
double gen_reward(const Discriminator& disc, const Transition& tr, double log_pi);

// Uniform draw over a weighted mixture of datasets.
class MixtureSampler {
 public:
  explicit MixtureSampler(std::vector<const Dataset*> sets, std::vector<double> weights = {});
  const Transition& sample(Rng& rng) const;
  size_t total_records() const { return total_; }

 private:
  std::vector<const Dataset*> sets_;
  std::vector<double> cum_;  // cumulative mixture weights
  size_t total_ = 0;
};

void bc_pretrain(GaussianPolicy& policy, const MixtureSampler& data, int steps, uint64_t seed,
                 double lr = 3e-4, int batch = 256);

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AirlConfig {
  PpoConfig ppo;
  double disc_lr = 3e-4;
  int disc_batch = 64;
  int disc_epochs_per_update = 1;  // full passes over the expert data per PPO batch
  int bc_steps = 2000;
  double divergence_loss_threshold = 10.0;
  int divergence_patience = 5;
};

struct AirlUpdateInfo {
  long env_steps = 0;
  double disc_loss = 0.0;       // mean over the update's disc minibatches
  double reg_term = 0.0;        // regularizer value if a hook is installed
  std::vector<double> mean_returns;  // native objectives, completed episodes
  PpoDiagnostics ppo;
};

// Alternating AIRL trainer. The regularizer hook lets the recursive procedure
// add a differentiable penalty to every discriminator minibatch: it returns
// the penalty value and accumulates its gradient into the g/h buffers.
class AirlTrainer {
 public:
  AirlTrainer(const MoEnv& env, AirlConfig cfg, uint64_t seed);

  using RegHook = std::function<double(const Discriminator&, ParamVector& gg, ParamVector& gh)>;

  // Trains for budget_steps env steps against the expert mixture.
  void train(const MixtureSampler& expert, long budget_steps, uint64_t seed,
             const RegHook& reg = nullptr,
             const std::function<void(const AirlUpdateInfo&)>& on_update = nullptr);

  // One discriminator minibatch step (exposed for the regularizer gradient test).
  double disc_step(const DiscBatch& batch, const RegHook& reg, double* reg_value = nullptr);

  const MoEnv& env;
  AirlConfig cfg;
  PpoTrainer gen;
  Discriminator disc;

 private:
  Adam opt_disc_;
  int diverged_streak_ = 0;
};

}  // namespace parirl
