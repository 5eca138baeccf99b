#pragma once

#include "parirl/airl.hpp"
#include "parirl/rdist.hpp"

namespace parirl {

// Frozen snapshot of a learned reward; the handle stays valid after the
// source discriminator trains on.
RewardHandle reward_from_disc(std::string id, const Discriminator& disc);

enum class DistanceKind { Epic, Mse };
enum class RegMode { TargetDistance, WeightedSum };

struct RegularizerConfig {
  double beta = 9.0;
  DistanceKind kind = DistanceKind::Epic;
  RegMode mode = RegMode::TargetDistance;
  int n_eval = 128;
  int n_canon = 512;
};

DistanceEstimate measure_distance(const RewardHandle& a, const RewardHandle& b, const MoEnv& env,
                                  const RegularizerConfig& cfg, uint64_t seed,
                                  const TransitionSampler* eval_sampler = nullptr);

// Pairwise distances (unordered pairs, k<l lexicographic) folded into the
// total budget: (1/(M-1)) * sum of pairwise distances.
double combine_pairwise(const std::vector<double>& pairwise, int n_rewards);

double target_budget(const std::vector<RewardHandle>& prev, const MoEnv& env,
                     const RegularizerConfig& cfg, uint64_t seed,
                     const TransitionSampler* eval_sampler = nullptr);

// max(0.05, budget/8): the near-side target stays small but meaningful.
double small_side_constant(double budget);

// eps[i] = c, remainder split equally over the other entries; c >= budget is
// clamped to budget/4 with a warning.
std::vector<double> split_budget(double budget, int adjacent_index, int n_rewards, double c,
                                 std::vector<std::string>* warnings = nullptr);

// sum_j (target_j - measured_j)^2
double regularization_term(std::span<const double> targets, std::span<const double> measured);
// sum_j w_j * measured_j with w = targets normalized (equal weights if all zero)
double weighted_sum_term(std::span<const double> targets, std::span<const double> measured);

// Differentiable reward-distance penalty against frozen previous-step rewards.
// Canonicalization of the structured reward g + gamma*h(s') - h(s) differs
// from canonicalized g by a batch constant only, so the penalty is computed
// through g alone and the shaping net receives exactly zero gradient.
class DiscRegularizer {
 public:
  DiscRegularizer(const MoEnv& env, std::vector<RewardHandle> prev, std::vector<double> targets,
                  RegularizerConfig cfg, TransitionSampler eval_sampler, uint64_t seed);

  // Draws fresh frozen Monte-Carlo batches.
  void refresh();
  // Penalty (beta-scaled) on the current frozen batches; gradients accumulate
  // into gg/gh when given.
  double eval(const Discriminator& disc, ParamVector* gg, ParamVector* gh);
  // Hook form: refresh (unless disabled) then eval.
  double operator()(const Discriminator& disc, ParamVector& gg, ParamVector& gh);

  void set_auto_refresh(bool v) { auto_refresh_ = v; }
  const std::vector<double>& last_measured() const { return last_measured_; }
  const RegularizerConfig& config() const { return cfg_; }

 private:
  const MoEnv& env_;
  std::vector<RewardHandle> prev_;
  std::vector<double> targets_;
  RegularizerConfig cfg_;
  TransitionSampler eval_sampler_;
  Rng eval_rng_, canon_rng_;
  bool auto_refresh_ = true;
  std::vector<Transition> eval_batch_;
  CanonBatch canon_;
  std::vector<std::vector<double>> y_;  // canonical values of prev_, per handle
  bool y_dirty_ = true;
  std::vector<double> last_measured_;
};

// Convenience for tests: plain discriminator loss plus the penalty on the
// regularizer's current frozen batches.
double regularized_disc_loss(const Discriminator& disc, const DiscBatch& batch,
                             DiscRegularizer& reg);

// sum_i omega_i * d(r, component_i), all distances on shared batches.
double regret_diagnostic(const RewardHandle& r, const std::vector<RewardHandle>& components,
                         std::span<const double> omega, const MoEnv& env,
                         const RegularizerConfig& cfg, uint64_t seed,
                         const TransitionSampler* eval_sampler = nullptr);

struct ParetoPolicyRecord {
  int step = 1;
  int branch = 0;
  std::string id;
  GaussianPolicy policy;
  ValueNet value;
  Discriminator disc;
};

struct StepDiagnostics {
  int step = 0;
  int branch = 0;
  double budget = 0.0;  // total target-distance budget for the step
  std::vector<double> targets;
  std::vector<double> measured;  // post-training distances to previous rewards
  double reg_term = 0.0;
  double regret = 0.0;
  double fork_distance = 0.0;  // distance to the fork parent before training
  long env_steps = 0;
};

struct ParirlConfig {
  AirlConfig airl;
  RegularizerConfig reg;
  int steps = 6;              // recursion depth G
  long step1_budget = 25000;  // env steps per individual imitation
  long recursive_budget = 0;  // <= 0 derives from the rule below
  int dataset_episodes = 10;  // episodes collected per branch per step
  double small_c = 0.0;       // <= 0 applies small_side_constant(budget)
};

// Per-branch budget for steps >= 2: step1/(2G-2), floored at step1/30.
long recursive_budget(const ParirlConfig& cfg);

struct ParirlResult {
  std::vector<ParetoPolicyRecord> pareto_set;
  std::vector<Dataset> final_datasets;
  std::vector<StepDiagnostics> diagnostics;
};

using BranchCallback = std::function<void(const ParetoPolicyRecord&, const Dataset&,
                                          const StepDiagnostics&)>;

// Step 1: individual imitation per expert dataset. Steps 2..G: fork each
// branch and retrain against the pooled previous-step data under the
// distance regularizer. The callback fires after each completed branch, so
// partial progress survives a later divergence abort.
ParirlResult run_parirl(const std::vector<Dataset>& experts, const MoEnv& env,
                        const ParirlConfig& cfg, uint64_t seed,
                        const BranchCallback& on_branch = nullptr);

}  // namespace parirl
