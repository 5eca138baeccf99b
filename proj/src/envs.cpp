#include "parirl/envs.hpp"

#include <cmath>
#include <stdexcept>

namespace parirl {

namespace {

constexpr double kVMax = 5.0;
constexpr double kPosMax = 100.0;  // horizon * dt * v_max, the reachable envelope

std::vector<double> repeated(double v, int n) { return std::vector<double>(n, v); }

}  // namespace

MoEnv MoEnv::make(const std::string& id) {
  MoEnv env;
  EnvSpec& s = env.spec_;
  s.id = id;
  if (id == "mo-car") {
    env.kind_ = Kind::Car;
    s.state_dim = 2;  // (x, v)
    s.action_dim = 1;
    s.n_objectives = 2;
    s.s_lo = {-kPosMax, -kVMax};
    s.s_hi = {kPosMax, kVMax};
  } else if (id == "mo-car3") {
    env.kind_ = Kind::Car3;
    s.state_dim = 6;  // (x, y, z, vx, vy, vz)
    s.action_dim = 3;
    s.n_objectives = 3;
    s.s_lo = {-kPosMax, -kPosMax, -kPosMax, -kVMax, -kVMax, -kVMax};
    s.s_hi = {kPosMax, kPosMax, kPosMax, kVMax, kVMax, kVMax};
  } else if (id == "mo-point2d") {
    env.kind_ = Kind::Point2D;
    s.state_dim = 4;  // (x, y, vx, vy)
    s.action_dim = 2;
    s.n_objectives = 2;
    s.s_lo = {-kPosMax, -kPosMax, -kVMax, -kVMax};
    s.s_hi = {kPosMax, kPosMax, kVMax, kVMax};
  } else {
    throw std::invalid_argument("unknown environment id: " + id);
  }
  s.a_lo = repeated(-1.0, s.action_dim);
  s.a_hi = repeated(1.0, s.action_dim);
  return env;
}

EnvState MoEnv::reset(uint64_t seed) const {
  (void)seed;
  return EnvState{std::vector<double>(spec_.state_dim, 0.0), 0};
}

void MoEnv::reward(std::span<const double> s, std::span<const double> a_clamped,
                   std::span<double> r_out) const {
  switch (kind_) {
    case Kind::Car:
      r_out[0] = 0.05 * s[1];
      r_out[1] = 0.3 - 0.15 * a_clamped[0] * a_clamped[0];
      break;
    case Kind::Car3:
      r_out[0] = s[3];
      r_out[1] = s[4];
      r_out[2] = s[5];
      break;
    case Kind::Point2D: {
      double cost = 0.5 * (a_clamped[0] * a_clamped[0] + a_clamped[1] * a_clamped[1]);
      r_out[0] = s[2] - cost;
      r_out[1] = s[3] - cost;
      break;
    }
  }
}

MoEnv::StepResult MoEnv::step(const EnvState& state, std::span<const double> action) const {
  if (static_cast<int>(state.s.size()) != spec_.state_dim ||
      static_cast<int>(action.size()) != spec_.action_dim)
    throw std::invalid_argument("step: dimension mismatch in " + spec_.id);
  if (!all_finite(state.s) || !all_finite(action))
    throw std::runtime_error("step: non-finite state or action in " + spec_.id);

  std::vector<double> a(spec_.action_dim);
  for (int d = 0; d < spec_.action_dim; ++d) a[d] = clamp(action[d], spec_.a_lo[d], spec_.a_hi[d]);

  StepResult out;
  out.reward.resize(spec_.n_objectives);
  reward(state.s, a, out.reward);

  out.next.s = state.s;
  int nv = spec_.action_dim;          // one velocity per actuated axis
  int pos_off = 0, vel_off = spec_.state_dim - nv;
  for (int d = 0; d < nv; ++d) {
    double v = clamp(state.s[vel_off + d] + a[d] * spec_.dt, -kVMax, kVMax);
    out.next.s[vel_off + d] = v;
    out.next.s[pos_off + d] = state.s[pos_off + d] + v * spec_.dt;
  }
  out.next.t = state.t + 1;
  out.done = out.next.t >= spec_.horizon;
  return out;
}

std::vector<Transition> MoEnv::sample_uniform_transitions(int n, Rng& rng) const {
  std::vector<Transition> out(n);
  for (Transition& tr : out) {
    tr.s.resize(spec_.state_dim);
    tr.s_next.resize(spec_.state_dim);
    tr.a.resize(spec_.action_dim);
    for (int i = 0; i < spec_.state_dim; ++i) tr.s[i] = rng.uniform(spec_.s_lo[i], spec_.s_hi[i]);
    for (int i = 0; i < spec_.action_dim; ++i) tr.a[i] = rng.uniform(spec_.a_lo[i], spec_.a_hi[i]);
    for (int i = 0; i < spec_.state_dim; ++i)
      tr.s_next[i] = rng.uniform(spec_.s_lo[i], spec_.s_hi[i]);
  }
  return out;
}

double scalarize(std::span<const double> r, std::span<const double> omega) {
  if (r.size() != omega.size()) throw std::invalid_argument("scalarize: length mismatch");
  double sum_w = 0.0, out = 0.0;
  for (size_t i = 0; i < omega.size(); ++i) {
    if (omega[i] < 0.0) throw std::invalid_argument("scalarize: negative weight");
    sum_w += omega[i];
    out += omega[i] * r[i];
  }
  if (std::fabs(sum_w - 1.0) > 1e-9)
    throw std::invalid_argument("scalarize: weights must sum to 1");
  return out;
}

}  // namespace parirl
