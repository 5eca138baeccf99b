#include "parirl/mlp.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace parirl {

namespace {

constexpr double kGeluC0 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC1 = 0.044715;

inline double activate(Act act, double z) {
  switch (act) {
    case Act::Tanh: return std::tanh(z);
    case Act::Relu: return z > 0.0 ? z : 0.0;
    case Act::Gelu: {
      double t = std::tanh(kGeluC0 * (z + kGeluC1 * z * z * z));
      return 0.5 * z * (1.0 + t);
    }
  }
  return 0.0;
}

inline double activate_grad(Act act, double z, double a) {
  switch (act) {
    case Act::Tanh: return 1.0 - a * a;
    case Act::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Act::Gelu: {
      double t = std::tanh(kGeluC0 * (z + kGeluC1 * z * z * z));
      return 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * kGeluC0 * (1.0 + 3.0 * kGeluC1 * z * z);
    }
  }
  return 0.0;
}

}  // namespace

std::vector<int> layer_dims(const MlpSpec& spec) {
  std::vector<int> dims;
  dims.reserve(spec.hidden.size() + 2);
  dims.push_back(spec.in);
  for (int h : spec.hidden) dims.push_back(h);
  dims.push_back(spec.out);
  return dims;
}

size_t param_count(const MlpSpec& spec) {
  auto dims = layer_dims(spec);
  size_t n = 0;
  for (size_t l = 0; l + 1 < dims.size(); ++l)
    n += static_cast<size_t>(dims[l + 1]) * dims[l] + dims[l + 1];
  return n;
}

std::string spec_signature(const MlpSpec& spec) {
  std::string s = "in:" + std::to_string(spec.in) + ";h:";
  for (size_t i = 0; i < spec.hidden.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(spec.hidden[i]);
  }
  s += ";out:" + std::to_string(spec.out) + ";act:";
  switch (spec.act) {
    case Act::Tanh: s += "tanh"; break;
    case Act::Relu: s += "relu"; break;
    case Act::Gelu: s += "gelu"; break;
  }
  return s;
}

ParamVector init_params(const MlpSpec& spec, Rng& rng, double final_gain) {
  auto dims = layer_dims(spec);
  ParamVector p(param_count(spec), 0.0);
  double gain = spec.act == Act::Tanh ? 1.0 : std::sqrt(2.0);
  size_t off = 0;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    bool last = l + 2 == dims.size();
    double scale = (last ? final_gain : gain) / std::sqrt(static_cast<double>(dims[l]));
    size_t nw = static_cast<size_t>(dims[l + 1]) * dims[l];
    for (size_t i = 0; i < nw; ++i) p[off + i] = scale * rng.normal();
    off += nw + dims[l + 1];  // biases stay zero
  }
  return p;
}

void mlp_forward(const MlpSpec& spec, const ParamVector& params,
                 std::span<const double> x, std::span<double> y, MlpCache* cache) {
  auto dims = layer_dims(spec);
  size_t L = dims.size() - 1;
  if (x.size() != static_cast<size_t>(spec.in) || y.size() != static_cast<size_t>(spec.out))
    throw std::invalid_argument("mlp_forward: dimension mismatch");
  if (params.size() != param_count(spec))
    throw std::invalid_argument("mlp_forward: bad parameter count");

  thread_local std::vector<double> buf_a, buf_b;
  std::vector<double>* cur = &buf_a;
  std::vector<double>* nxt = &buf_b;
  cur->assign(x.begin(), x.end());

  if (cache) {
    cache->z.resize(L);
    cache->a.resize(L);  // a[l] = input to layer l
    cache->a[0].assign(x.begin(), x.end());
  }

  size_t off = 0;
  for (size_t l = 0; l < L; ++l) {
    int ni = dims[l], no = dims[l + 1];
    nxt->resize(no);
    const double* W = params.data() + off;
    const double* b = W + static_cast<size_t>(no) * ni;
    for (int j = 0; j < no; ++j) {
      const double* w = W + static_cast<size_t>(j) * ni;
      double s = b[j];
      for (int i = 0; i < ni; ++i) s += w[i] * (*cur)[i];
      (*nxt)[j] = s;
    }
    if (cache) cache->z[l].assign(nxt->begin(), nxt->end());
    if (l + 1 < L) {
      for (int j = 0; j < no; ++j) (*nxt)[j] = activate(spec.act, (*nxt)[j]);
      if (cache) cache->a[l + 1].assign(nxt->begin(), nxt->end());
    }
    off += static_cast<size_t>(no) * ni + no;
    std::swap(cur, nxt);
  }
  for (int j = 0; j < spec.out; ++j) y[j] = (*cur)[j];
}

double mlp_forward_scalar(const MlpSpec& spec, const ParamVector& params,
                          std::span<const double> x, MlpCache* cache) {
  double y = 0.0;
  mlp_forward(spec, params, x, std::span<double>(&y, 1), cache);
  return y;
}

void mlp_backward(const MlpSpec& spec, const ParamVector& params, const MlpCache& cache,
                  std::span<const double> gy, ParamVector& gparams, std::vector<double>* gx) {
  auto dims = layer_dims(spec);
  size_t L = dims.size() - 1;
  if (gy.size() != static_cast<size_t>(spec.out))
    throw std::invalid_argument("mlp_backward: cotangent dimension mismatch");
  if (gparams.size() != params.size())
    throw std::invalid_argument("mlp_backward: gradient buffer size mismatch");
  if (cache.z.size() != L)
    throw std::invalid_argument("mlp_backward: cache not from matching forward");

  // Parameter offsets per layer.
  thread_local std::vector<size_t> offs;
  offs.assign(L, 0);
  size_t off = 0;
  for (size_t l = 0; l < L; ++l) {
    offs[l] = off;
    off += static_cast<size_t>(dims[l + 1]) * dims[l] + dims[l + 1];
  }

  thread_local std::vector<double> delta, prev;
  delta.assign(gy.begin(), gy.end());

  for (size_t l = L; l-- > 0;) {
    int ni = dims[l], no = dims[l + 1];
    const double* W = params.data() + offs[l];
    double* gW = gparams.data() + offs[l];
    double* gb = gW + static_cast<size_t>(no) * ni;
    const std::vector<double>& in = cache.a[l];

    for (int j = 0; j < no; ++j) {
      double d = delta[j];
      gb[j] += d;
      double* gw = gW + static_cast<size_t>(j) * ni;
      for (int i = 0; i < ni; ++i) gw[i] += d * in[i];
    }
    if (l > 0 || gx) {
      prev.assign(ni, 0.0);
      for (int j = 0; j < no; ++j) {
        double d = delta[j];
        const double* w = W + static_cast<size_t>(j) * ni;
        for (int i = 0; i < ni; ++i) prev[i] += d * w[i];
      }
      if (l > 0) {
        // Fold in the activation derivative of the previous hidden layer.
        const std::vector<double>& z = cache.z[l - 1];
        const std::vector<double>& a = cache.a[l];
        for (int i = 0; i < ni; ++i) prev[i] *= activate_grad(spec.act, z[i], a[i]);
        delta = prev;
      } else if (gx) {
        *gx = prev;
      }
    }
  }
}

}  // namespace parirl
