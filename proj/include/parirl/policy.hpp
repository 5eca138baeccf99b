#pragma once

#include <span>
#include <vector>

#include "parirl/common.hpp"
#include "parirl/mlp.hpp"

namespace parirl {

constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 2.0;
constexpr double kLogTwoPi = 1.8378770664093454836;

// Diagonal Gaussian over actions; the mean comes from the actor MLP and the
// log stds are free parameters shared across states, clamped to [-5, 2].
struct GaussianPolicy {
  MlpSpec actor_spec;
  ParamVector actor;
  std::vector<double> log_std;

  static GaussianPolicy make(int state_dim, int action_dim, const std::vector<int>& hidden,
                             uint64_t seed, double init_log_std = -0.5);

  int state_dim() const { return actor_spec.in; }
  int action_dim() const { return actor_spec.out; }

  void mean_action(std::span<const double> s, std::span<double> a_out,
                   MlpCache* cache = nullptr) const;
  void sample_action(std::span<const double> s, std::span<double> a_out, Rng& rng) const;
  double log_prob(std::span<const double> s, std::span<const double> a) const;
  double entropy() const;
  void clamp_log_std();

  // log pi(a|s) plus `weight`-scaled gradient accumulation into gactor/glog_std.
  double log_prob_grad(std::span<const double> s, std::span<const double> a, double weight,
                       ParamVector& gactor, std::vector<double>& glog_std) const;
};

struct ValueNet {
  MlpSpec spec;
  ParamVector params;

  static ValueNet make(int state_dim, const std::vector<int>& hidden, uint64_t seed);
  double value(std::span<const double> s) const;
};

}  // namespace parirl
