#pragma once

#include <functional>

#include "parirl/envs.hpp"

namespace parirl {

struct FrontPoint {
  std::vector<double> returns;
  std::string policy_id;
  std::vector<double> omega;  // preference annotation, may be empty
};

class UndefinedMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using PolicyFn =
    std::function<void(std::span<const double> s, std::span<double> a_out, Rng& rng)>;

// Mean undiscounted per-objective return over full episodes.
FrontPoint evaluate_policy(const PolicyFn& policy, const MoEnv& env, int episodes, uint64_t seed);

// Non-dominated subset under strict Pareto dominance; result ordered by
// objective 1 ascending (stable for ties).
std::vector<FrontPoint> pareto_filter(const std::vector<FrontPoint>& points);

// Componentwise minimum over all evaluated points minus 5% of the range;
// fixed once per experiment so HV values stay comparable.
std::vector<double> reference_point(const std::vector<FrontPoint>& all_points);

// Exact dominated hypervolume: 2-D sorted sweep, 3-D slab decomposition over
// the third coordinate. Points that fail to dominate r0 are dropped with a
// warning.
double hypervolume(const std::vector<FrontPoint>& front, std::span<const double> r0,
                   std::vector<std::string>* warnings = nullptr);

// Mean squared gap between consecutive sorted values, summed per objective.
double sparsity(const std::vector<FrontPoint>& front);

// Fraction of pairs (i<j after sorting by objective 1 ascending) whose
// objective-2 returns are non-increasing. Two objectives only.
double coherence(const std::vector<FrontPoint>& points);

// Drops points whose objective-1 return falls below the running maximum when
// visited in annotated omega_1-ascending order. Applied before HV/SP, never
// before CR.
std::vector<FrontPoint> exclude_out_of_order(const std::vector<FrontPoint>& points,
                                             std::vector<std::string>* excluded_ids = nullptr);

}  // namespace parirl
