#pragma once

#include <span>
#include <string>
#include <vector>

#include "parirl/common.hpp"

namespace parirl {

enum class Act { Tanh, Relu, Gelu };

// Hidden layers use `act`, the output layer is linear.
struct MlpSpec {
  int in = 0;
  std::vector<int> hidden;
  int out = 0;
  Act act = Act::Tanh;
};

// Flat parameter block; layout per layer is W (out x in, row-major) then b.
using ParamVector = std::vector<double>;

std::vector<int> layer_dims(const MlpSpec& spec);
size_t param_count(const MlpSpec& spec);
std::string spec_signature(const MlpSpec& spec);

ParamVector init_params(const MlpSpec& spec, Rng& rng, double final_gain = 1.0);

// Per-layer buffers kept by the caller so repeated forward calls don't allocate.
struct MlpCache {
  std::vector<std::vector<double>> z;  // pre-activations, one per layer
  std::vector<std::vector<double>> a;  // a[0] = input, then post-activation per hidden layer
};

void mlp_forward(const MlpSpec& spec, const ParamVector& params,
                 std::span<const double> x, std::span<double> y,
                 MlpCache* cache = nullptr);

double mlp_forward_scalar(const MlpSpec& spec, const ParamVector& params,
                          std::span<const double> x, MlpCache* cache = nullptr);

// Accumulates d(loss)/d(params) into gparams given d(loss)/d(y); cache must come
// from a forward pass over the same x and params. Optionally yields d(loss)/d(x).
void mlp_backward(const MlpSpec& spec, const ParamVector& params, const MlpCache& cache,
                  std::span<const double> gy, ParamVector& gparams,
                  std::vector<double>* gx = nullptr);

}  // namespace parirl
