#pragma once

#include <functional>

#include "parirl/envs.hpp"

namespace parirl {

using RewardFn = std::function<double(std::span<const double> s, std::span<const double> a,
                                      std::span<const double> s_next)>;

// A frozen, comparable reward function.
struct RewardHandle {
  std::string id;
  RewardFn fn;
};

RewardHandle reward_from_env_objective(std::string id, const MoEnv& env, int objective);

// Mutually independent uniform draws of S, A, S' over the env envelope,
// stored as triples.
struct CanonBatch {
  std::vector<Transition> samples;
};

CanonBatch make_canon_batch(const MoEnv& env, int n, Rng& rng);

// Constant canonical values signal a broken reward net, so they are a hard error.
class DegenerateRewardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// For each evaluation transition: r(s,a,s') + mean_c[g r(s',A_c,S'_c) - r(s,A_c,S'_c)
// - g r(S_c,A_c,S'_c)]. Removes potential shaping exactly in expectation.
std::vector<double> canonicalize(const RewardFn& r, const std::vector<Transition>& eval_batch,
                                 const CanonBatch& canon, double gamma);

// sqrt((1 - rho)/2), a metric on centered-normalized value vectors.
double pearson_distance(std::span<const double> x, std::span<const double> y);

// Differentiable variant: d = sqrt(((1 - rho) + 1e-12)/2), gradient w.r.t. x in
// gx. The epsilon keeps the slope finite when x == y (fork initialization).
double pearson_distance_smoothed_grad(std::span<const double> x, std::span<const double> y,
                                      std::vector<double>& gx);

// Evaluation-batch source: uniform over the env envelope, or uniform over the
// pooled records of a dataset union.
class TransitionSampler {
 public:
  static TransitionSampler uniform(const MoEnv& env);
  static TransitionSampler pooled(std::vector<const Dataset*> sets);

  std::vector<Transition> sample(int n, Rng& rng) const;

 private:
  TransitionSampler() = default;
  const MoEnv* env_ = nullptr;
  std::vector<const Dataset*> sets_;
  std::vector<size_t> cum_;  // cumulative record counts over sets_
};

struct DistanceEstimate {
  double value = 0.0;
  int n_eval = 0;
  uint64_t seed = 0;
};

// Canonicalize both rewards on shared batches, then Pearson distance. The
// shared batches make the estimate symmetric bit for bit.
DistanceEstimate epic_distance(const RewardHandle& a, const RewardHandle& b, const MoEnv& env,
                               int n_eval, int n_canon, uint64_t seed,
                               const TransitionSampler* eval_sampler = nullptr);

double mse_distance(const RewardFn& a, const RewardFn& b, const std::vector<Transition>& batch);

}  // namespace parirl
