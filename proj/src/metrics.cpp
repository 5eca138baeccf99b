#include "parirl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace parirl {

namespace {

// a strictly dominates b: no worse anywhere, better somewhere.
bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
  bool better = false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) better = true;
  }
  return better;
}

void check_uniform_dims(const std::vector<FrontPoint>& points) {
  if (points.empty()) return;
  size_t m = points[0].returns.size();
  for (const FrontPoint& p : points) {
    if (p.returns.size() != m) throw std::invalid_argument("front points have mixed dimensions");
    for (double v : p.returns)
      if (!std::isfinite(v)) throw std::invalid_argument("front point with non-finite return");
  }
}

// Dominated area of 2-D values above (r0x, r0y); tolerates dominated inputs.
double sweep_area_2d(std::vector<std::pair<double, double>> pts, double r0x, double r0y) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double area = 0.0, best_y = r0y;
  for (const auto& [x, y] : pts) {
    if (y > best_y) {
      area += (x - r0x) * (y - best_y);
      best_y = y;
    }
  }
  return area;
}

}  // namespace

FrontPoint evaluate_policy(const PolicyFn& policy, const MoEnv& env, int episodes, uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate_policy: episodes must be >= 1");
  const EnvSpec& es = env.spec();
  FrontPoint fp;
  fp.returns.assign(es.n_objectives, 0.0);
  std::vector<double> act(es.action_dim);
  for (int ep = 0; ep < episodes; ++ep) {
    Rng rng(derive_seed(seed, "eval-ep", static_cast<uint64_t>(ep)));
    EnvState state = env.reset(seed);
    bool done = false;
    while (!done) {
      policy(state.s, act, rng);
      auto out = env.step(state, act);
      for (int j = 0; j < es.n_objectives; ++j) fp.returns[j] += out.reward[j];
      done = out.done;
      state = out.next;
    }
  }
  for (double& v : fp.returns) v /= episodes;
  return fp;
}

std::vector<FrontPoint> pareto_filter(const std::vector<FrontPoint>& points) {
  if (points.empty()) throw std::invalid_argument("pareto_filter: empty input");
  check_uniform_dims(points);
  std::vector<FrontPoint> out;
  for (size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (size_t j = 0; j < points.size() && !dominated; ++j)
      if (j != i && dominates(points[j].returns, points[i].returns)) dominated = true;
    if (!dominated) out.push_back(points[i]);
  }
  std::stable_sort(out.begin(), out.end(), [](const FrontPoint& a, const FrontPoint& b) {
    return a.returns[0] < b.returns[0];
  });
  return out;
}

std::vector<double> reference_point(const std::vector<FrontPoint>& all_points) {
  if (all_points.empty()) throw std::invalid_argument("reference_point: empty input");
  check_uniform_dims(all_points);
  size_t m = all_points[0].returns.size();
  std::vector<double> lo(m, std::numeric_limits<double>::infinity());
  std::vector<double> hi(m, -std::numeric_limits<double>::infinity());
  for (const FrontPoint& p : all_points)
    for (size_t j = 0; j < m; ++j) {
      lo[j] = std::min(lo[j], p.returns[j]);
      hi[j] = std::max(hi[j], p.returns[j]);
    }
  std::vector<double> r0(m);
  for (size_t j = 0; j < m; ++j) {
    double pad = 0.05 * (hi[j] - lo[j]);
    if (pad == 0.0) pad = 0.05;
    r0[j] = lo[j] - pad;
  }
  return r0;
}

double hypervolume(const std::vector<FrontPoint>& front, std::span<const double> r0,
                   std::vector<std::string>* warnings) {
  if (front.empty()) return 0.0;
  check_uniform_dims(front);
  size_t m = front[0].returns.size();
  if (m != r0.size()) throw std::invalid_argument("hypervolume: reference dimension mismatch");
  if (m != 2 && m != 3)
    throw std::invalid_argument("hypervolume: supports 2 or 3 objectives only");

  std::vector<const FrontPoint*> kept;
  for (const FrontPoint& p : front) {
    bool ok = true;
    for (size_t j = 0; j < m; ++j)
      if (p.returns[j] <= r0[j]) ok = false;
    if (ok) {
      kept.push_back(&p);
    } else if (warnings) {
      warnings->push_back("hypervolume: point '" + p.policy_id +
                          "' does not dominate the reference point, dropped");
    }
  }
  if (kept.empty()) return 0.0;

  if (m == 2) {
    std::vector<std::pair<double, double>> pts;
    for (const FrontPoint* p : kept) pts.emplace_back(p->returns[0], p->returns[1]);
    return sweep_area_2d(std::move(pts), r0[0], r0[1]);
  }

  // 3-D: slabs between consecutive z-levels, each slab's area from the points
  // whose z reaches it.
  std::sort(kept.begin(), kept.end(), [](const FrontPoint* a, const FrontPoint* b) {
    return a->returns[2] > b->returns[2];
  });
  double vol = 0.0;
  std::vector<std::pair<double, double>> active;
  for (size_t i = 0; i < kept.size(); ++i) {
    active.emplace_back(kept[i]->returns[0], kept[i]->returns[1]);
    double z_lo = i + 1 < kept.size() ? kept[i + 1]->returns[2] : r0[2];
    double z_hi = kept[i]->returns[2];
    if (z_hi > z_lo) vol += sweep_area_2d(active, r0[0], r0[1]) * (z_hi - z_lo);
  }
  return vol;
}

double sparsity(const std::vector<FrontPoint>& front) {
  if (front.size() < 2)
    throw UndefinedMetricError("sparsity: needs at least 2 front points");
  check_uniform_dims(front);
  size_t m = front[0].returns.size();
  size_t n = front.size();
  double acc = 0.0;
  std::vector<double> vals(n);
  for (size_t j = 0; j < m; ++j) {
    for (size_t i = 0; i < n; ++i) vals[i] = front[i].returns[j];
    std::sort(vals.begin(), vals.end());
    for (size_t i = 0; i + 1 < n; ++i) {
      double gap = vals[i] - vals[i + 1];
      acc += gap * gap;
    }
  }
  return acc / static_cast<double>(n - 1);
}

double coherence(const std::vector<FrontPoint>& points) {
  if (points.size() < 2)
    throw UndefinedMetricError("coherence: needs at least 2 points");
  check_uniform_dims(points);
  if (points[0].returns.size() != 2)
    throw UndefinedMetricError("coherence: defined for exactly 2 objectives");
  std::vector<size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (points[a].returns[0] != points[b].returns[0])
      return points[a].returns[0] < points[b].returns[0];
    if (points[a].returns[1] != points[b].returns[1])
      return points[a].returns[1] > points[b].returns[1];
    return a < b;
  });
  size_t n = points.size();
  long hits = 0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (points[order[i]].returns[1] >= points[order[j]].returns[1]) ++hits;
  return 2.0 * static_cast<double>(hits) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

std::vector<FrontPoint> exclude_out_of_order(const std::vector<FrontPoint>& points,
                                             std::vector<std::string>* excluded_ids) {
  if (points.empty()) return {};
  check_uniform_dims(points);
  for (const FrontPoint& p : points)
    if (p.omega.empty())
      throw std::invalid_argument("exclude_out_of_order: point without preference annotation");
  std::vector<size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return points[a].omega[0] < points[b].omega[0]; });
  std::vector<FrontPoint> out;
  double running_max = -std::numeric_limits<double>::infinity();
  for (size_t idx : order) {
    const FrontPoint& p = points[idx];
    if (p.returns[0] >= running_max) {
      running_max = p.returns[0];
      out.push_back(p);
    } else if (excluded_ids) {
      excluded_ids->push_back(p.policy_id);
    }
  }
  return out;
}

}  // namespace parirl
