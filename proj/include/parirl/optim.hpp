#pragma once

#include <string>
#include <vector>

#include "parirl/common.hpp"

namespace parirl {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
};

// Non-finite gradients are a hard failure; the label shows up in the error.
class GradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Adam {
 public:
  Adam(AdamConfig cfg, size_t n_params, std::string label);

  // Clips grad by global norm, then applies one Adam step in place.
  void step(std::vector<double>& params, std::vector<double>& grad);

  long steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  AdamConfig cfg_;
  std::string label_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

// Scales grad in place so its global L2 norm is at most max_norm; returns the
// pre-clip norm. max_norm <= 0 leaves grad untouched.
double clip_global_norm(std::vector<double>& grad, double max_norm);

}  // namespace parirl
