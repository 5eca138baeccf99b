#include "parirl/rdist.hpp"

#include <algorithm>
#include <cmath>

namespace parirl {

namespace {

constexpr double kSmoothEps = 1e-12;

struct PearsonStats {
  double mx, my, sxx, syy, sxy, rho;
};

PearsonStats pearson_stats(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least 2 values");
  size_t n = x.size();
  PearsonStats st{};
  for (size_t i = 0; i < n; ++i) {
    st.mx += x[i];
    st.my += y[i];
  }
  st.mx /= static_cast<double>(n);
  st.my /= static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    double dx = x[i] - st.mx, dy = y[i] - st.my;
    st.sxx += dx * dx;
    st.syy += dy * dy;
    st.sxy += dx * dy;
  }
  double floor_x = 1e-20 * (st.mx * st.mx + 1.0) * static_cast<double>(n);
  double floor_y = 1e-20 * (st.my * st.my + 1.0) * static_cast<double>(n);
  if (st.sxx <= floor_x || st.syy <= floor_y)
    throw DegenerateRewardError("pearson: zero variance input");
  st.rho = std::clamp(st.sxy / std::sqrt(st.sxx * st.syy), -1.0, 1.0);
  return st;
}

}  // namespace

RewardHandle reward_from_env_objective(std::string id, const MoEnv& env, int objective) {
  if (objective < 0 || objective >= env.spec().n_objectives)
    throw std::invalid_argument("reward_from_env_objective: bad objective index");
  int m = env.spec().n_objectives;
  return {std::move(id),
          [&env, objective, m](std::span<const double> s, std::span<const double> a,
                               std::span<const double>) {
            thread_local std::vector<double> r;
            r.resize(m);
            env.reward(s, a, r);
            return r[objective];
          }};
}

CanonBatch make_canon_batch(const MoEnv& env, int n, Rng& rng) {
  if (n <= 0) throw std::invalid_argument("make_canon_batch: n must be positive");
  CanonBatch b;
  b.samples = env.sample_uniform_transitions(n, rng);
  return b;
}

std::vector<double> canonicalize(const RewardFn& r, const std::vector<Transition>& eval_batch,
                                 const CanonBatch& canon, double gamma) {
  if (eval_batch.empty() || canon.samples.empty())
    throw std::invalid_argument("canonicalize: empty batch");
  double m = static_cast<double>(canon.samples.size());
  double mean_all = 0.0;
  for (const Transition& c : canon.samples) mean_all += r(c.s, c.a, c.s_next);
  mean_all /= m;

  std::vector<double> out(eval_batch.size());
  for (size_t e = 0; e < eval_batch.size(); ++e) {
    const Transition& tr = eval_batch[e];
    double acc = 0.0;
    for (const Transition& c : canon.samples)
      acc += gamma * r(tr.s_next, c.a, c.s_next) - r(tr.s, c.a, c.s_next);
    out[e] = r(tr.s, tr.a, tr.s_next) + acc / m - gamma * mean_all;
  }
  return out;
}

double pearson_distance(std::span<const double> x, std::span<const double> y) {
  PearsonStats st = pearson_stats(x, y);
  return std::clamp(std::sqrt(0.5 * (1.0 - st.rho)), 0.0, 1.0);
}

double pearson_distance_smoothed_grad(std::span<const double> x, std::span<const double> y,
                                      std::vector<double>& gx) {
  PearsonStats st = pearson_stats(x, y);
  double d = std::sqrt(0.5 * ((1.0 - st.rho) + kSmoothEps));
  double dd_drho = -0.25 / d;
  double inv_cross = 1.0 / std::sqrt(st.sxx * st.syy);
  gx.assign(x.size(), 0.0);
  for (size_t e = 0; e < x.size(); ++e) {
    double drho = (y[e] - st.my) * inv_cross - st.rho * (x[e] - st.mx) / st.sxx;
    gx[e] = dd_drho * drho;
  }
  return d;
}

TransitionSampler TransitionSampler::uniform(const MoEnv& env) {
  TransitionSampler s;
  s.env_ = &env;
  return s;
}

TransitionSampler TransitionSampler::pooled(std::vector<const Dataset*> sets) {
  TransitionSampler s;
  if (sets.empty()) throw std::invalid_argument("TransitionSampler: no datasets");
  size_t total = 0;
  s.cum_.reserve(sets.size());
  for (const Dataset* d : sets) {
    total += d->records.size();
    s.cum_.push_back(total);
  }
  if (total == 0) throw std::invalid_argument("TransitionSampler: all datasets empty");
  s.sets_ = std::move(sets);
  return s;
}

std::vector<Transition> TransitionSampler::sample(int n, Rng& rng) const {
  if (n <= 0) throw std::invalid_argument("TransitionSampler: n must be positive");
  if (env_) return env_->sample_uniform_transitions(n, rng);
  std::vector<Transition> out;
  out.reserve(n);
  size_t total = cum_.back();
  for (int i = 0; i < n; ++i) {
    size_t k = static_cast<size_t>(rng.uniform_int(static_cast<int>(total)));
    size_t set = 0;
    while (cum_[set] <= k) ++set;
    size_t base = set == 0 ? 0 : cum_[set - 1];
    out.push_back(sets_[set]->records[k - base]);
  }
  return out;
}

DistanceEstimate epic_distance(const RewardHandle& a, const RewardHandle& b, const MoEnv& env,
                               int n_eval, int n_canon, uint64_t seed,
                               const TransitionSampler* eval_sampler) {
  Rng canon_rng(derive_seed(seed, "canon", 0));
  CanonBatch canon = make_canon_batch(env, n_canon, canon_rng);
  Rng eval_rng(derive_seed(seed, "eval", 0));
  std::vector<Transition> eval_batch =
      eval_sampler ? eval_sampler->sample(n_eval, eval_rng)
                   : TransitionSampler::uniform(env).sample(n_eval, eval_rng);

  double gamma = env.spec().gamma;
  std::vector<double> xa = canonicalize(a.fn, eval_batch, canon, gamma);
  std::vector<double> xb = canonicalize(b.fn, eval_batch, canon, gamma);
  double d;
  try {
    d = pearson_distance(xa, xb);
  } catch (const DegenerateRewardError&) {
    // Re-check sides separately so the error names the offending reward.
    auto var_of = [](const std::vector<double>& v) {
      double m = 0.0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      double s = 0.0;
      for (double x : v) s += (x - m) * (x - m);
      return std::pair<double, double>{s, m};
    };
    auto [sa, ma] = var_of(xa);
    auto [sb, mb] = var_of(xb);
    double na = static_cast<double>(xa.size());
    std::string who = sa <= 1e-20 * (ma * ma + 1.0) * na ? a.id : b.id;
    (void)sb;
    (void)mb;
    throw DegenerateRewardError("epic_distance: canonical values of reward '" + who +
                                "' are degenerate (zero variance)");
  }
  return {d, n_eval, seed};
}

double mse_distance(const RewardFn& a, const RewardFn& b, const std::vector<Transition>& batch) {
  if (batch.empty()) throw std::invalid_argument("mse_distance: empty batch");
  double acc = 0.0;
  for (const Transition& tr : batch) {
    double diff = a(tr.s, tr.a, tr.s_next) - b(tr.s, tr.a, tr.s_next);
    acc += diff * diff;
  }
  return acc / static_cast<double>(batch.size());
}

}  // namespace parirl
