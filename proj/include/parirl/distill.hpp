#pragma once

#include <functional>

#include "parirl/envs.hpp"
#include "parirl/mlp.hpp"

namespace parirl {

constexpr int kTimeEmbDim = 32;

// alpha_bar[0] = 1 exactly; strictly decreasing; per-step alpha and the
// posterior noise scale sigma (sigma[1] = 0: the final reverse step is
// deterministic because the executed action is not resampled).
struct DiffusionSchedule {
  int K = 0;
  std::vector<double> alpha_bar;  // size K+1
  std::vector<double> alpha;      // size K+1, index 0 unused
  std::vector<double> sigma;      // size K+1, index 0 unused
};

DiffusionSchedule cosine_schedule(int K);

void timestep_embedding(int k, std::span<double> out);

// Out-of-simplex sentinel standing in for "no preference".
std::vector<double> null_preference(int pref_dim);

// Noise predictor over [noisy action, timestep embedding, state, preference].
struct DiffusionPolicy {
  MlpSpec net_spec;
  ParamVector net;
  DiffusionSchedule schedule;
  int state_dim = 0, action_dim = 0, pref_dim = 0;

  static DiffusionPolicy make(int state_dim, int action_dim, int pref_dim, int K, uint64_t seed,
                              const std::vector<int>& hidden = {256, 256});

  void predict(std::span<const double> a_k, int k, std::span<const double> s,
               std::span<const double> omega, std::span<double> out) const;
};

// a^k = sqrt(alpha_bar^k) a + sqrt(1 - alpha_bar^k) eta; eta_out receives the
// drawn noise (the training target).
void forward_noise(std::span<const double> a, int k, const DiffusionSchedule& sched, Rng& rng,
                   std::span<double> a_k_out, std::span<double> eta_out);

// Literal form (1-delta)*cond + delta*uncond; the standard classifier-free
// convention (1+delta)*cond - delta*uncond behind the flag.
void guided_noise_prediction(const DiffusionPolicy& dp, std::span<const double> a_k, int k,
                             std::span<const double> s, std::span<const double> omega,
                             double delta, bool standard_convention, std::span<double> out);

struct GuidanceConfig {
  double delta = 1.2;
  double p_uncond = 0.2;
  bool standard_convention = false;
};

// Reverse diffusion from pure noise, clamped to the action bounds.
std::vector<double> sample_action(const DiffusionPolicy& dp, std::span<const double> s,
                                  std::span<const double> omega, const GuidanceConfig& gc,
                                  std::span<const double> a_lo, std::span<const double> a_hi,
                                  uint64_t seed);

struct AnnotatedSource {
  std::string policy_id;
  std::vector<double> omega;
  const Dataset* data = nullptr;
};

struct PreferenceAnnotatedDataset {
  std::vector<AnnotatedSource> sources;
};

// N preferences in ascending objective-1 order: linear for two objectives,
// evenly spread over a barycentric lattice for three.
std::vector<std::vector<double>> ascending_preferences(int n, int m);

// Sorts sources ascending by objective-1 mean return (ties by step index)
// and assigns ascending_preferences in that order.
PreferenceAnnotatedDataset annotate_preferences(const std::vector<const Dataset*>& sets,
                                                const std::vector<std::vector<double>>& returns,
                                                const std::vector<int>& step_index,
                                                const std::vector<std::string>& policy_ids);

struct DistillConfig {
  double lr = 3e-5;
  int batch_per_demo = 32;
  int steps = 5000;
  int denoise_steps = 50;
  std::vector<int> hidden = {256, 256};
};

// Noise-prediction MSE training; with probability gc.p_uncond the preference
// input is dropped to the null token, training the unconditioned branch.
DiffusionPolicy train_denoiser(const PreferenceAnnotatedDataset& data, DiffusionPolicy dp,
                               const DistillConfig& cfg, const GuidanceConfig& gc, uint64_t seed,
                               const std::function<void(int, double)>& on_step = nullptr);

}  // namespace parirl
