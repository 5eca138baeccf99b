#include "parirl/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace parirl {

GaussianPolicy GaussianPolicy::make(int state_dim, int action_dim, const std::vector<int>& hidden,
                                    uint64_t seed, double init_log_std) {
  GaussianPolicy p;
  p.actor_spec = MlpSpec{state_dim, hidden, action_dim, Act::Tanh};
  Rng rng(seed);
  p.actor = init_params(p.actor_spec, rng, 0.01);  // small head keeps early actions near zero
  p.log_std.assign(action_dim, init_log_std);
  return p;
}

void GaussianPolicy::mean_action(std::span<const double> s, std::span<double> a_out,
                                 MlpCache* cache) const {
  mlp_forward(actor_spec, actor, s, a_out, cache);
}

void GaussianPolicy::sample_action(std::span<const double> s, std::span<double> a_out,
                                   Rng& rng) const {
  mean_action(s, a_out);
  for (size_t d = 0; d < a_out.size(); ++d) a_out[d] += std::exp(log_std[d]) * rng.normal();
}

double GaussianPolicy::log_prob(std::span<const double> s, std::span<const double> a) const {
  thread_local std::vector<double> mu;
  mu.resize(a.size());
  mean_action(s, mu);
  double lp = -0.5 * kLogTwoPi * static_cast<double>(a.size());
  for (size_t d = 0; d < a.size(); ++d) {
    double sd = std::exp(log_std[d]);
    double zd = (a[d] - mu[d]) / sd;
    lp += -0.5 * zd * zd - log_std[d];
  }
  return lp;
}

double GaussianPolicy::entropy() const {
  double h = 0.0;
  for (double ls : log_std) h += ls + 0.5 * (kLogTwoPi + 1.0);
  return h;
}

void GaussianPolicy::clamp_log_std() {
  for (double& ls : log_std) ls = clamp(ls, kLogStdMin, kLogStdMax);
}

double GaussianPolicy::log_prob_grad(std::span<const double> s, std::span<const double> a,
                                     double weight, ParamVector& gactor,
                                     std::vector<double>& glog_std) const {
  thread_local MlpCache cache;
  thread_local std::vector<double> mu, gmu;
  mu.resize(a.size());
  gmu.resize(a.size());
  mlp_forward(actor_spec, actor, s, mu, &cache);

  double lp = -0.5 * kLogTwoPi * static_cast<double>(a.size());
  for (size_t d = 0; d < a.size(); ++d) {
    double sd = std::exp(log_std[d]);
    double zd = (a[d] - mu[d]) / sd;
    lp += -0.5 * zd * zd - log_std[d];
    gmu[d] = weight * zd / sd;                     // d lp / d mu = (a - mu) / sd^2
    glog_std[d] += weight * (zd * zd - 1.0);       // d lp / d log_std
  }
  mlp_backward(actor_spec, actor, cache, gmu, gactor);
  return lp;
}

ValueNet ValueNet::make(int state_dim, const std::vector<int>& hidden, uint64_t seed) {
  ValueNet v;
  v.spec = MlpSpec{state_dim, hidden, 1, Act::Tanh};
  Rng rng(seed);
  v.params = init_params(v.spec, rng, 1.0);
  return v;
}

double ValueNet::value(std::span<const double> s) const {
  return mlp_forward_scalar(spec, params, s);
}

}  // namespace parirl
