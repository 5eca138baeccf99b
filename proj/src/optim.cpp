#include "parirl/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace parirl {

Adam::Adam(AdamConfig cfg, size_t n_params, std::string label)
    : cfg_(cfg), label_(std::move(label)), m_(n_params, 0.0), v_(n_params, 0.0) {}

double clip_global_norm(std::vector<double>& grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    double s = max_norm / norm;
    for (double& g : grad) g *= s;
  }
  return norm;
}

void Adam::step(std::vector<double>& params, std::vector<double>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("Adam::step: size mismatch for " + label_);
  if (!all_finite(grad))
    throw GradientError("non-finite gradient in " + label_ + " at step " + std::to_string(t_ + 1));

  clip_global_norm(grad, cfg_.max_grad_norm);
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    double mhat = m_[i] / bc1;
    double vhat = v_[i] / bc2;
    params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
}

}  // namespace parirl
