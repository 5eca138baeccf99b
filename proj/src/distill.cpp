#include "parirl/distill.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "parirl/optim.hpp"

namespace parirl {

DiffusionSchedule cosine_schedule(int K) {
  if (K < 1) throw std::invalid_argument("cosine_schedule: K must be >= 1");
  constexpr double kOffset = 0.008;
  constexpr double kHalfPi = 1.5707963267948966;
  auto f = [&](int k) {
    double t = (static_cast<double>(k) / K + kOffset) / (1.0 + kOffset);
    double c = std::cos(t * kHalfPi);
    return c * c;
  };
  DiffusionSchedule s;
  s.K = K;
  s.alpha_bar.assign(K + 1, 1.0);
  s.alpha.assign(K + 1, 1.0);
  s.sigma.assign(K + 1, 0.0);
  double f0 = f(0);
  double prev_raw = 1.0;
  for (int k = 1; k <= K; ++k) {
    double raw = f(k) / f0;
    // Clip extreme tail betas the way DDPM implementations do to keep the
    // reverse-step scale 1/sqrt(alpha) bounded.
    double beta = std::clamp(1.0 - raw / prev_raw, 1e-12, 0.999);
    prev_raw = raw;
    s.alpha[k] = 1.0 - beta;
    s.alpha_bar[k] = s.alpha_bar[k - 1] * s.alpha[k];
    // Posterior noise scale; exactly 0 at k=1 because alpha_bar[0] = 1.
    s.sigma[k] = std::sqrt((1.0 - s.alpha_bar[k - 1]) / (1.0 - s.alpha_bar[k]) * beta);
  }
  return s;
}

void timestep_embedding(int k, std::span<double> out) {
  if (out.size() != kTimeEmbDim)
    throw std::invalid_argument("timestep_embedding: output must be kTimeEmbDim wide");
  constexpr int half = kTimeEmbDim / 2;
  constexpr double kLog1e4 = 9.210340371976184;  // ln(10000)
  for (int i = 0; i < half; ++i) {
    double freq = std::exp(-kLog1e4 * i / (half - 1));
    out[i] = std::sin(k * freq);
    out[half + i] = std::cos(k * freq);
  }
}

std::vector<double> null_preference(int pref_dim) {
  return std::vector<double>(pref_dim, -1.0);
}

DiffusionPolicy DiffusionPolicy::make(int state_dim, int action_dim, int pref_dim, int K,
                                      uint64_t seed, const std::vector<int>& hidden) {
  if (state_dim < 1 || action_dim < 1 || pref_dim < 1)
    throw std::invalid_argument("DiffusionPolicy: bad dimensions");
  DiffusionPolicy dp;
  dp.state_dim = state_dim;
  dp.action_dim = action_dim;
  dp.pref_dim = pref_dim;
  dp.net_spec = {action_dim + kTimeEmbDim + state_dim + pref_dim, hidden, action_dim, Act::Gelu};
  Rng rng(derive_seed(seed, "denoiser", 0));
  dp.net = init_params(dp.net_spec, rng);
  dp.schedule = cosine_schedule(K);
  return dp;
}

namespace {

std::span<const double> assemble_input(const DiffusionPolicy& dp, std::span<const double> a_k,
                                       int k, std::span<const double> s,
                                       std::span<const double> omega) {
  if (static_cast<int>(a_k.size()) != dp.action_dim ||
      static_cast<int>(s.size()) != dp.state_dim ||
      static_cast<int>(omega.size()) != dp.pref_dim)
    throw std::invalid_argument("DiffusionPolicy: input dimension mismatch");
  if (k < 1 || k > dp.schedule.K)
    throw std::invalid_argument("DiffusionPolicy: timestep out of range");
  thread_local std::vector<double> in;
  in.resize(dp.net_spec.in);
  size_t off = 0;
  std::copy(a_k.begin(), a_k.end(), in.begin() + off);
  off += a_k.size();
  timestep_embedding(k, std::span<double>(in.data() + off, kTimeEmbDim));
  off += kTimeEmbDim;
  std::copy(s.begin(), s.end(), in.begin() + off);
  off += s.size();
  std::copy(omega.begin(), omega.end(), in.begin() + off);
  return in;
}

}  // namespace

void DiffusionPolicy::predict(std::span<const double> a_k, int k, std::span<const double> s,
                              std::span<const double> omega, std::span<double> out) const {
  mlp_forward(net_spec, net, assemble_input(*this, a_k, k, s, omega), out);
}

void forward_noise(std::span<const double> a, int k, const DiffusionSchedule& sched, Rng& rng,
                   std::span<double> a_k_out, std::span<double> eta_out) {
  if (k < 1 || k > sched.K) throw std::invalid_argument("forward_noise: timestep out of range");
  if (a.size() != a_k_out.size() || a.size() != eta_out.size())
    throw std::invalid_argument("forward_noise: size mismatch");
  double ab = sched.alpha_bar[k];
  double c1 = std::sqrt(ab), c2 = std::sqrt(1.0 - ab);
  for (size_t d = 0; d < a.size(); ++d) {
    eta_out[d] = rng.normal();
    a_k_out[d] = c1 * a[d] + c2 * eta_out[d];
  }
}

void guided_noise_prediction(const DiffusionPolicy& dp, std::span<const double> a_k, int k,
                             std::span<const double> s, std::span<const double> omega,
                             double delta, bool standard_convention, std::span<double> out) {
  thread_local std::vector<double> cond, uncond;
  cond.resize(dp.action_dim);
  uncond.resize(dp.action_dim);
  dp.predict(a_k, k, s, omega, cond);
  std::vector<double> null_tok = null_preference(dp.pref_dim);
  dp.predict(a_k, k, s, null_tok, uncond);
  double wc = standard_convention ? 1.0 + delta : 1.0 - delta;
  double wu = standard_convention ? -delta : delta;
  for (int d = 0; d < dp.action_dim; ++d) out[d] = wc * cond[d] + wu * uncond[d];
}

std::vector<double> sample_action(const DiffusionPolicy& dp, std::span<const double> s,
                                  std::span<const double> omega, const GuidanceConfig& gc,
                                  std::span<const double> a_lo, std::span<const double> a_hi,
                                  uint64_t seed) {
  if (static_cast<int>(a_lo.size()) != dp.action_dim ||
      static_cast<int>(a_hi.size()) != dp.action_dim)
    throw std::invalid_argument("sample_action: bound dimension mismatch");
  const DiffusionSchedule& sc = dp.schedule;
  Rng rng(seed);
  std::vector<double> a(dp.action_dim);
  for (double& v : a) v = rng.normal();
  std::vector<double> pred(dp.action_dim);
  for (int k = sc.K; k >= 1; --k) {
    guided_noise_prediction(dp, a, k, s, omega, gc.delta, gc.standard_convention, pred);
    double c1 = 1.0 / std::sqrt(sc.alpha[k]);
    double c2 = (1.0 - sc.alpha[k]) / std::sqrt(1.0 - sc.alpha_bar[k]);
    for (int d = 0; d < dp.action_dim; ++d) {
      a[d] = c1 * (a[d] - c2 * pred[d]);
      if (k > 1) a[d] += sc.sigma[k] * rng.normal();
    }
  }
  for (int d = 0; d < dp.action_dim; ++d) a[d] = clamp(a[d], a_lo[d], a_hi[d]);
  return a;
}

std::vector<std::vector<double>> ascending_preferences(int n, int m) {
  if (n < 1) throw std::invalid_argument("ascending_preferences: n must be >= 1");
  std::vector<std::vector<double>> out;
  if (m == 2) {
    if (n == 1) return {{0.5, 0.5}};
    for (int i = 0; i < n; ++i) {
      double w = static_cast<double>(i) / (n - 1);
      out.push_back({w, 1.0 - w});
    }
    return out;
  }
  if (m == 3) {
    // Smallest barycentric lattice holding n points, sampled evenly in
    // (omega1, omega2)-lexicographic order.
    int r = 1;
    while ((r + 1) * (r + 2) / 2 < n) ++r;
    std::vector<std::vector<double>> lattice;
    for (int i = 0; i <= r; ++i)
      for (int j = 0; j <= r - i; ++j)
        lattice.push_back({static_cast<double>(i) / r, static_cast<double>(j) / r,
                           static_cast<double>(r - i - j) / r});
    std::sort(lattice.begin(), lattice.end());
    int count = static_cast<int>(lattice.size());
    if (n == 1) return {lattice[count / 2]};
    for (int t = 0; t < n; ++t)
      out.push_back(lattice[static_cast<size_t>(t) * (count - 1) / (n - 1)]);
    return out;
  }
  throw std::invalid_argument("ascending_preferences: only 2 or 3 objectives supported");
}

PreferenceAnnotatedDataset annotate_preferences(const std::vector<const Dataset*>& sets,
                                                const std::vector<std::vector<double>>& returns,
                                                const std::vector<int>& step_index,
                                                const std::vector<std::string>& policy_ids) {
  size_t n = sets.size();
  if (n == 0) throw std::invalid_argument("annotate_preferences: empty policy set");
  if (returns.size() != n || step_index.size() != n || policy_ids.size() != n)
    throw std::invalid_argument("annotate_preferences: input size mismatch");
  int m = static_cast<int>(returns[0].size());
  for (const auto& r : returns)
    if (static_cast<int>(r.size()) != m)
      throw std::invalid_argument("annotate_preferences: ragged returns");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (returns[a][0] != returns[b][0]) return returns[a][0] < returns[b][0];
    if (step_index[a] != step_index[b]) return step_index[a] < step_index[b];
    return a < b;
  });

  auto prefs = ascending_preferences(static_cast<int>(n), m);
  PreferenceAnnotatedDataset out;
  for (size_t rank = 0; rank < n; ++rank) {
    size_t i = order[rank];
    out.sources.push_back({policy_ids[i], prefs[rank], sets[i]});
  }
  return out;
}

DiffusionPolicy train_denoiser(const PreferenceAnnotatedDataset& data, DiffusionPolicy dp,
                               const DistillConfig& cfg, const GuidanceConfig& gc, uint64_t seed,
                               const std::function<void(int, double)>& on_step) {
  if (data.sources.empty()) throw std::invalid_argument("train_denoiser: no sources");
  for (const auto& src : data.sources) {
    if (!src.data || src.data->records.empty())
      throw std::invalid_argument("train_denoiser: empty source dataset");
    if (static_cast<int>(src.omega.size()) != dp.pref_dim)
      throw std::invalid_argument("train_denoiser: preference dimension mismatch");
  }
  if (gc.p_uncond < 0.0 || gc.p_uncond >= 1.0)
    throw std::invalid_argument("train_denoiser: p_uncond must be in [0,1)");

  Adam opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8, 0.0}, dp.net.size(), "denoiser");
  Rng rng(derive_seed(seed, "distill", 0));
  const int da = dp.action_dim;
  const int total = cfg.batch_per_demo * static_cast<int>(data.sources.size());
  std::vector<double> a_k(da), eta(da), pred(da), gy(da);
  ParamVector grad(dp.net.size());
  MlpCache cache;
  std::vector<double> null_tok = null_preference(dp.pref_dim);

  for (int step = 0; step < cfg.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    double inv = 1.0 / (static_cast<double>(total) * da);
    for (const auto& src : data.sources) {
      for (int b = 0; b < cfg.batch_per_demo; ++b) {
        const Transition& tr =
            src.data->records[rng.uniform_int(static_cast<int>(src.data->records.size()))];
        int k = 1 + rng.uniform_int(dp.schedule.K);
        forward_noise(tr.a, k, dp.schedule, rng, a_k, eta);
        bool drop = rng.uniform() < gc.p_uncond;
        auto in = assemble_input(dp, a_k, k, tr.s, drop ? std::span<const double>(null_tok)
                                                        : std::span<const double>(src.omega));
        mlp_forward(dp.net_spec, dp.net, in, pred, &cache);
        for (int d = 0; d < da; ++d) {
          double diff = pred[d] - eta[d];
          loss += diff * diff * inv;
          gy[d] = 2.0 * diff * inv;
        }
        mlp_backward(dp.net_spec, dp.net, cache, gy, grad);
      }
    }
    if (!std::isfinite(loss))
      throw std::runtime_error("train_denoiser: non-finite loss at step " + std::to_string(step));
    opt.step(dp.net, grad);
    if (on_step) on_step(step, loss);
  }
  return dp;
}

}  // namespace parirl
