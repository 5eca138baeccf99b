#include "parirl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "parirl/checkpoint.hpp"
#include "parirl/ppo.hpp"
#include "parirl/trajfile.hpp"

namespace parirl {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string created_stamp(const RunConfig& cfg) {
  if (cfg.deterministic) return "1970-01-01T00:00:00Z";
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

uint64_t spec_hash(const MlpSpec& s, const std::string& tag) {
  std::string d = tag + ":in=" + std::to_string(s.in) + ";out=" + std::to_string(s.out) +
                  ";act=" + std::to_string(static_cast<int>(s.act)) + ";h=";
  for (int h : s.hidden) d += std::to_string(h) + ",";
  const unsigned char* p = reinterpret_cast<const unsigned char*>(d.data());
  uint64_t lo = crc32(p, d.size(), 0);
  uint64_t hi = crc32(p, d.size(), 0x9e3779b9u);
  return (hi << 32) | lo;
}

void save_policy(const std::string& path, const GaussianPolicy& pol) {
  std::vector<double> flat = pol.actor;
  flat.insert(flat.end(), pol.log_std.begin(), pol.log_std.end());
  save_params(path, spec_hash(pol.actor_spec, "gauss"), flat);
}

PolicyFn mean_action_fn(const GaussianPolicy& pol) {
  return [&pol](std::span<const double> s, std::span<double> a, Rng&) { pol.mean_action(s, a); };
}

void ensure_dir(const std::string& d) { fs::create_directories(d); }

void write_run_config(const RunConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  write_text_file(out_dir + "/config.txt", dump_config(cfg));
}

std::string expert_path(const std::string& out_dir, int i) {
  return out_dir + "/experts/expert_" + std::to_string(i + 1) + ".jsonl";
}

}  // namespace

std::vector<Dataset> gen_experts(const RunConfig& cfg, const std::string& out_dir) {
  validate_config(cfg);
  write_run_config(cfg, out_dir);
  ensure_dir(out_dir + "/experts");
  const MoEnv env = MoEnv::make(cfg.env_id);
  std::vector<Dataset> out;
  std::vector<FrontPoint> true_returns;
  for (int i = 0; i < cfg.n_experts; ++i) {
    const std::vector<double>& omega = cfg.expert_omegas[i];
    PpoTrainer trainer(env, cfg.parirl.airl.ppo, derive_seed(cfg.seed, "expert", i));
    RewardSource scalarized = [&omega](std::span<const double>, std::span<const double>,
                                       std::span<const double>, double,
                                       std::span<const double> env_reward) {
      double v = 0.0;
      for (size_t k = 0; k < omega.size(); ++k) v += omega[k] * env_reward[k];
      return v;
    };
    train_ppo(trainer, env, scalarized, cfg.expert_budget, derive_seed(cfg.seed, "expert-train", i));
    std::string id = "expert-" + std::to_string(i + 1);
    Dataset ds = collect_dataset(trainer.policy, env, cfg.expert_episodes,
                                 derive_seed(cfg.seed, "expert-data", i), id, kDemoNoiseScale);
    ds.seed = cfg.seed;
    ds.created = created_stamp(cfg);
    write_trajectory_file(expert_path(out_dir, i), ds);
    FrontPoint fp = evaluate_policy(mean_action_fn(trainer.policy), env, cfg.eval_episodes,
                                    derive_seed(cfg.seed, "expert-eval", i));
    fp.policy_id = id;
    fp.omega = omega;
    true_returns.push_back(std::move(fp));
    out.push_back(std::move(ds));
  }
  write_text_file(out_dir + "/experts/experts.csv", front_csv(true_returns));
  return out;
}

std::vector<Dataset> load_experts(const RunConfig& cfg, const std::string& out_dir) {
  std::vector<Dataset> out;
  for (int i = 0; i < cfg.n_experts; ++i) {
    std::string path = expert_path(out_dir, i);
    if (!fs::exists(path))
      throw std::runtime_error("missing expert dataset '" + path + "'; run gen-experts first");
    Dataset ds = read_trajectory_file(path);
    if (ds.env_id != cfg.env_id)
      throw std::runtime_error(path + ": env '" + ds.env_id + "' does not match config '" +
                               cfg.env_id + "'");
    out.push_back(std::move(ds));
  }
  return out;
}

namespace {

struct BranchMeta {
  std::string id;
  int step = 0, branch = 0;
  std::vector<double> returns;
};

void write_branch(const RunConfig& cfg, const std::string& out_dir, const MoEnv& env,
                  const ParetoPolicyRecord& rec, const Dataset& ds, const StepDiagnostics& diag,
                  std::vector<BranchMeta>& metas) {
  std::string dir = out_dir + "/branches/" + rec.id;
  ensure_dir(dir);
  save_policy(dir + "/policy.ckpt", rec.policy);
  save_params(dir + "/value.ckpt", spec_hash(rec.value.spec, "value"), rec.value.params);
  save_params(dir + "/disc_g.ckpt", spec_hash(rec.disc.g_spec, "disc-g"), rec.disc.g);
  save_params(dir + "/disc_h.ckpt", spec_hash(rec.disc.h_spec, "disc-h"), rec.disc.h);
  Dataset stamped = ds;
  stamped.seed = cfg.seed;
  stamped.created = created_stamp(cfg);
  write_trajectory_file(dir + "/dataset.jsonl", stamped);
  FrontPoint fp = evaluate_policy(mean_action_fn(rec.policy), env, cfg.eval_episodes,
                                  derive_seed(cfg.seed, "front-eval", rec.step * 64 + rec.branch));
  ordered_json meta;
  meta["id"] = rec.id;
  meta["step"] = rec.step;
  meta["branch"] = rec.branch;
  meta["env_steps"] = diag.env_steps;
  meta["returns"] = fp.returns;
  meta["gamma"] = rec.disc.gamma;
  meta["reward_hidden"] = rec.disc.g_spec.hidden;
  meta["shaping_hidden"] = rec.disc.h_spec.hidden;
  write_text_file(dir + "/meta.json", meta.dump(2) + "\n");
  metas.push_back({rec.id, rec.step, rec.branch, fp.returns});
}

}  // namespace

TrainResult run_train(const RunConfig& cfg, const std::string& out_dir) {
  validate_config(cfg);
  write_run_config(cfg, out_dir);
  const MoEnv env = MoEnv::make(cfg.env_id);
  std::vector<Dataset> experts = load_experts(cfg, out_dir);

  ParirlConfig pc = cfg.parirl;
  if (cfg.mode == "weighted-sum-ablation") pc.reg.mode = RegMode::WeightedSum;

  std::vector<BranchMeta> metas;
  std::vector<StepDiagnostics> diags;
  auto on_branch = [&](const ParetoPolicyRecord& rec, const Dataset& ds,
                       const StepDiagnostics& diag) {
    write_branch(cfg, out_dir, env, rec, ds, diag, metas);
    diags.push_back(diag);
    write_text_file(out_dir + "/diagnostics.csv", diagnostics_csv(diags));
  };
  ParirlResult res = run_parirl(experts, env, pc, derive_seed(cfg.seed, "parirl", 0), on_branch);

  // Pairwise distance matrix over every learned reward, shared batches per pair.
  std::vector<RewardHandle> rewards;
  std::vector<std::string> ids;
  for (const ParetoPolicyRecord& rec : res.pareto_set) {
    rewards.push_back(reward_from_disc(rec.id, rec.disc));
    ids.push_back(rec.id);
  }
  size_t n = rewards.size();
  std::vector<std::vector<double>> dmat(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      dmat[i][j] = dmat[j][i] =
          measure_distance(rewards[i], rewards[j], env, pc.reg,
                           derive_seed(cfg.seed, "dist-matrix", static_cast<int>(i * n + j)))
              .value;
    }
  write_text_file(out_dir + "/distances.csv", distance_matrix_csv(ids, dmat));

  // Annotate each branch with an evenly spaced preference for distillation
  // and for the ordering-based report metrics.
  std::vector<const Dataset*> sets;
  std::vector<std::vector<double>> returns;
  std::vector<int> steps;
  std::vector<std::string> names;
  for (size_t i = 0; i < res.pareto_set.size(); ++i) {
    sets.push_back(&res.final_datasets[i]);
    returns.push_back(metas[i].returns);
    steps.push_back(metas[i].step);
    names.push_back(metas[i].id);
  }
  PreferenceAnnotatedDataset annotated = annotate_preferences(sets, returns, steps, names);

  std::vector<FrontPoint> front;
  for (const BranchMeta& m : metas) {
    FrontPoint fp;
    fp.policy_id = m.id;
    fp.returns = m.returns;
    for (const AnnotatedSource& src : annotated.sources)
      if (src.policy_id == m.id) fp.omega = src.omega;
    front.push_back(std::move(fp));
  }
  write_text_file(out_dir + "/pareto_front.csv", front_csv(front));
  return {front, res.diagnostics};
}

std::vector<FrontPoint> run_baseline(const RunConfig& cfg, const std::string& out_dir) {
  validate_config(cfg);
  if (cfg.n_experts != 2)
    throw ConfigError("the mixed-data baseline is defined for exactly 2 expert datasets");
  write_run_config(cfg, out_dir);
  const MoEnv env = MoEnv::make(cfg.env_id);
  std::vector<Dataset> experts = load_experts(cfg, out_dir);

  int n = cfg.baseline_mixtures > 0 ? cfg.baseline_mixtures : cfg.n_experts * cfg.parirl.steps;
  long budget = cfg.baseline_budget > 0 ? cfg.baseline_budget : cfg.parirl.step1_budget;
  std::vector<FrontPoint> front;
  for (int k = 0; k < n; ++k) {
    double rho = n == 1 ? 0.5 : static_cast<double>(k) / (n - 1);
    MixtureSampler mix({&experts[0], &experts[1]}, {rho, 1.0 - rho});
    AirlTrainer t(env, cfg.parirl.airl, derive_seed(cfg.seed, "baseline", k));
    t.train(mix, budget, derive_seed(cfg.seed, "baseline-train", k));
    FrontPoint fp = evaluate_policy(mean_action_fn(t.gen.policy), env, cfg.eval_episodes,
                                    derive_seed(cfg.seed, "baseline-eval", k));
    fp.policy_id = "mix-" + std::to_string(k);
    fp.omega = {rho, 1.0 - rho};
    front.push_back(std::move(fp));
    write_text_file(out_dir + "/baseline_front.csv", front_csv(front));
  }
  return front;
}

void run_distill(const RunConfig& cfg, const std::string& out_dir) {
  validate_config(cfg);
  write_run_config(cfg, out_dir);
  const MoEnv env = MoEnv::make(cfg.env_id);
  std::vector<FrontPoint> front =
      parse_front_csv(read_text_file(out_dir + "/pareto_front.csv"), "pareto_front.csv");
  if (front.empty()) throw std::runtime_error("pareto_front.csv has no policies");

  std::vector<Dataset> datasets;
  datasets.reserve(front.size());
  PreferenceAnnotatedDataset data;
  for (const FrontPoint& fp : front)
    datasets.push_back(read_trajectory_file(out_dir + "/branches/" + fp.policy_id + "/dataset.jsonl"));
  for (size_t i = 0; i < front.size(); ++i) {
    if (front[i].omega.empty())
      throw std::runtime_error("pareto_front.csv row '" + front[i].policy_id +
                               "' lacks a preference annotation");
    data.sources.push_back({front[i].policy_id, front[i].omega, &datasets[i]});
  }

  const EnvSpec& spec = env.spec();
  DiffusionPolicy dp =
      DiffusionPolicy::make(spec.state_dim, spec.action_dim, spec.n_objectives,
                            cfg.distill.denoise_steps, derive_seed(cfg.seed, "distill", 0),
                            cfg.distill.hidden);
  dp = train_denoiser(data, std::move(dp), cfg.distill, cfg.guidance,
                      derive_seed(cfg.seed, "distill-train", 0));

  save_params(out_dir + "/distill.ckpt", spec_hash(dp.net_spec, "denoiser"), dp.net);
  ordered_json side;
  side["state_dim"] = dp.state_dim;
  side["action_dim"] = dp.action_dim;
  side["pref_dim"] = dp.pref_dim;
  side["hidden"] = cfg.distill.hidden;
  side["denoise_steps"] = cfg.distill.denoise_steps;
  side["schedule"] = "cosine";
  side["delta"] = cfg.guidance.delta;
  side["p_uncond"] = cfg.guidance.p_uncond;
  side["guidance_convention"] = cfg.guidance.standard_convention ? "standard" : "literal";
  write_text_file(out_dir + "/distill.json", side.dump(2) + "\n");
}

DistilledModel load_distilled(const std::string& out_dir) {
  ordered_json side = ordered_json::parse(read_text_file(out_dir + "/distill.json"));
  std::vector<int> hidden = side["hidden"].get<std::vector<int>>();
  DiffusionPolicy dp = DiffusionPolicy::make(side["state_dim"].get<int>(),
                                             side["action_dim"].get<int>(),
                                             side["pref_dim"].get<int>(),
                                             side["denoise_steps"].get<int>(), 0, hidden);
  dp.net = load_params(out_dir + "/distill.ckpt", spec_hash(dp.net_spec, "denoiser"));
  GuidanceConfig gc;
  gc.delta = side["delta"].get<double>();
  gc.p_uncond = side["p_uncond"].get<double>();
  gc.standard_convention = side["guidance_convention"].get<std::string>() == "standard";
  return {std::move(dp), gc};
}

namespace {

PolicyFn distilled_fn(const DistilledModel& model, const EnvSpec& spec,
                      const std::vector<double>& omega) {
  return [&model, &spec, omega](std::span<const double> s, std::span<double> a, Rng& rng) {
    std::vector<double> act = sample_action(model.dp, s, omega, model.gc, spec.a_lo, spec.a_hi,
                                            rng.next_u64());
    std::copy(act.begin(), act.end(), a.begin());
  };
}

}  // namespace

FrontPoint eval_distilled_once(const RunConfig& cfg, const std::string& out_dir,
                               const std::vector<double>& omega) {
  const MoEnv env = MoEnv::make(cfg.env_id);
  if (omega.size() != static_cast<size_t>(env.spec().n_objectives))
    throw ConfigError("omega dimension does not match env objectives");
  DistilledModel model = load_distilled(out_dir);
  FrontPoint fp = evaluate_policy(distilled_fn(model, env.spec(), omega), env, cfg.eval_episodes,
                                  derive_seed(cfg.seed, "du-eval", 0));
  fp.policy_id = "du";
  fp.omega = omega;
  return fp;
}

std::vector<FrontPoint> eval_distilled_grid(const RunConfig& cfg, const std::string& out_dir) {
  validate_config(cfg);
  const MoEnv env = MoEnv::make(cfg.env_id);
  DistilledModel model = load_distilled(out_dir);
  std::vector<std::vector<double>> grid =
      ascending_preferences(cfg.grid_points, env.spec().n_objectives);
  std::vector<FrontPoint> front;
  for (size_t k = 0; k < grid.size(); ++k) {
    FrontPoint fp = evaluate_policy(distilled_fn(model, env.spec(), grid[k]), env,
                                    cfg.grid_episodes,
                                    derive_seed(cfg.seed, "du-grid", static_cast<int>(k)));
    fp.policy_id = "du-" + std::to_string(k);
    fp.omega = grid[k];
    front.push_back(std::move(fp));
  }
  write_text_file(out_dir + "/du_front.csv", front_csv(front));
  return front;
}

namespace {

struct SeriesInput {
  std::string name;
  std::vector<FrontPoint> points;
};

void add_metric_rows(const RunConfig& cfg, const SeriesInput& s, const std::vector<double>& r0,
                     std::vector<MetricRow>& rows) {
  std::string run_id = cfg.env_id + "/" + s.name;
  int n_points = static_cast<int>(s.points.size());
  bool annotated = !s.points.empty();
  for (const FrontPoint& p : s.points)
    if (p.omega.empty()) annotated = false;
  std::vector<FrontPoint> kept = s.points;
  int n_excluded = 0;
  if (annotated) {
    std::vector<std::string> dropped;
    kept = exclude_out_of_order(s.points, &dropped);
    n_excluded = static_cast<int>(dropped.size());
  }
  std::vector<FrontPoint> front = kept.empty() ? kept : pareto_filter(kept);
  MetricRow hv{run_id, cfg.seed, "hv", 0.0, r0, n_points, n_excluded};
  hv.value = hypervolume(front, r0);
  rows.push_back(hv);
  if (front.size() >= 2) {
    MetricRow sp{run_id, cfg.seed, "sp", sparsity(front), r0, n_points, n_excluded};
    rows.push_back(sp);
  }
  if (!s.points.empty() && s.points.front().returns.size() == 2) {
    MetricRow cr{run_id, cfg.seed, "cr", coherence(s.points), r0, n_points, 0};
    rows.push_back(cr);
  }
}

}  // namespace

ReportResult run_report(const RunConfig& cfg, const std::string& out_dir) {
  validate_config(cfg);
  std::vector<SeriesInput> series;
  series.push_back({"parirl", parse_front_csv(read_text_file(out_dir + "/pareto_front.csv"),
                                              "pareto_front.csv")});
  if (fs::exists(out_dir + "/du_front.csv"))
    series.push_back(
        {"parirl-du", parse_front_csv(read_text_file(out_dir + "/du_front.csv"), "du_front.csv")});
  if (fs::exists(out_dir + "/baseline_front.csv"))
    series.push_back({"baseline", parse_front_csv(read_text_file(out_dir + "/baseline_front.csv"),
                                                  "baseline_front.csv")});

  std::vector<FrontPoint> all;
  for (const SeriesInput& s : series) all.insert(all.end(), s.points.begin(), s.points.end());
  if (all.empty()) throw std::runtime_error("no front points to report");
  std::vector<double> r0 = reference_point(all);

  ReportResult out;
  out.r0 = r0;
  std::vector<MetricRow> rows;
  for (const SeriesInput& s : series) add_metric_rows(cfg, s, r0, rows);
  out.rows = rows;
  write_text_file(out_dir + "/metrics.csv", metrics_csv(rows));

  std::vector<ScatterSeries> scatter;
  for (SeriesInput& s : series) scatter.push_back({s.name, std::move(s.points)});
  write_text_file(out_dir + "/scatter.svg", scatter_svg(scatter));
  return out;
}

ReportResult run_pipeline(const RunConfig& cfg, const std::string& out_dir) {
  validate_config(cfg);
  write_run_config(cfg, out_dir);
  if (!fs::exists(expert_path(out_dir, 0))) gen_experts(cfg, out_dir);
  run_train(cfg, out_dir);
  run_distill(cfg, out_dir);
  eval_distilled_grid(cfg, out_dir);
  if (cfg.with_baseline) run_baseline(cfg, out_dir);
  return run_report(cfg, out_dir);
}

}  // namespace parirl
