#pragma once

#include <span>
#include <string>
#include <vector>

#include "parirl/common.hpp"

namespace parirl {

struct Transition {
  std::vector<double> s, a, s_next;
};

struct EnvSpec {
  std::string id;
  int state_dim = 0;
  int action_dim = 0;
  int n_objectives = 0;
  double dt = 0.1;
  double gamma = 0.99;
  int horizon = 200;
  std::vector<double> s_lo, s_hi;  // sampling envelope, also the NaN guard range
  std::vector<double> a_lo, a_hi;
};

struct EnvState {
  std::vector<double> s;
  int t = 0;
};

// Analytic multi-objective control environments. Rewards are functions of the
// pre-step velocity and the clamped action, so every objective is exact.
class MoEnv {
 public:
  static MoEnv make(const std::string& id);  // mo-car | mo-car3 | mo-point2d

  const EnvSpec& spec() const { return spec_; }

  // Deterministic zero start; seed is part of the interface for stochastic
  // variants but does not influence these environments.
  EnvState reset(uint64_t seed) const;

  struct StepResult {
    EnvState next;
    std::vector<double> reward;
    bool done = false;
  };
  StepResult step(const EnvState& state, std::span<const double> action) const;

  // Reward for an already-clamped action at the given state.
  void reward(std::span<const double> s, std::span<const double> a_clamped,
              std::span<double> r_out) const;

  // Independent uniform draws of (S, A, S') over the sampling envelope.
  std::vector<Transition> sample_uniform_transitions(int n, Rng& rng) const;

 private:
  enum class Kind { Car, Car3, Point2D };
  EnvSpec spec_;
  Kind kind_ = Kind::Car;
};

// omega must be non-negative and sum to 1 within 1e-9.
double scalarize(std::span<const double> r, std::span<const double> omega);

// Flat record-level demonstration dataset. t is the in-episode step index of
// each record, so t == 0 marks an episode start.
struct Dataset {
  std::string env_id;
  std::string policy_id;
  uint64_t seed = 0;
  std::string created;
  std::vector<int> t;
  std::vector<Transition> records;
};

}  // namespace parirl
