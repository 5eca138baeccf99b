#pragma once

#include "parirl/distill.hpp"
#include "parirl/parirl.hpp"

namespace parirl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every hyperparameter lives here with its default, and dump_config writes
// them all back out, so a run directory always shows the full effective
// configuration.
struct RunConfig {
  std::string env_id = "mo-car";
  uint64_t seed = 1;
  std::string mode = "parirl";  // parirl | weighted-sum-ablation | mixed-airl-baseline |
                                // distill | eval
  bool deterministic = false;
  int n_experts = 2;
  std::vector<std::vector<double>> expert_omegas = {{0.9, 0.1}, {0.1, 0.9}};
  long expert_budget = 25000;
  int expert_episodes = 50;
  int eval_episodes = 16;
  int grid_points = 101;
  int grid_episodes = 16;
  bool with_baseline = true;
  int baseline_mixtures = 0;  // 0 = match the Pareto set size
  long baseline_budget = 0;   // 0 = step1_budget
  ParirlConfig parirl;
  DistillConfig distill;
  GuidanceConfig guidance;
};

RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig parse_config_file(const std::string& path);
std::string dump_config(const RunConfig& cfg);

// Structural checks beyond parsing: env exists, omegas are simplex points of
// the env's objective count, budgets positive.
void validate_config(const RunConfig& cfg);

// Shortest round-trip decimal form; shared by config dump and CSV writers.
std::string fmt_num(double v);

}  // namespace parirl
