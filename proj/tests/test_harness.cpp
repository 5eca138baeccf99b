#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "parirl/config.hpp"
#include "parirl/pipeline.hpp"
#include "parirl/report.hpp"
#include "parirl/trajfile.hpp"

using namespace parirl;
namespace fs = std::filesystem;

namespace {

const char* kFullConfig = R"cfg(
# every key set away from its default
[run]
env = mo-car3
seed = 42
mode = weighted-sum-ablation
deterministic = true
experts = 3
expert_omega_1 = 0.7, 0.2, 0.1
expert_omega_2 = 0.2, 0.5, 0.3
expert_omega_3 = 0.1, 0.3, 0.6
expert_budget = 12345
expert_episodes = 7
eval_episodes = 3
grid_points = 11
grid_episodes = 2
with_baseline = false
baseline_mixtures = 5
baseline_budget = 999

[parirl]
steps = 4
step1_budget = 5000
recursive_budget = 700
dataset_episodes = 5
small_c = 0.07

[reg]
beta = 4.5
kind = mse
mode = weighted-sum
n_eval = 64
n_canon = 256

[ppo]
lr = 0.001
epochs = 5
batch_steps = 1000
minibatches = 2
clip = 0.2
max_grad_norm = 1.5
gae_lambda = 0.9
entropy_coef = 0.02
vf_coef = 0.7
actor_hidden = 8, 8
value_hidden = 16

[airl]
disc_lr = 0.002
disc_batch = 32
disc_epochs = 2
bc_steps = 100
divergence_threshold = 25
divergence_patience = 3

[distill]
lr = 0.0001
batch_per_demo = 8
steps = 200
denoise_steps = 10
hidden = 64, 64
delta = 0.8
p_uncond = 0.1
guidance_convention = standard
)cfg";

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config text parses, dumps, and round-trips byte-identically") {
  RunConfig c = parse_config_text(kFullConfig, "test");
  CHECK(c.env_id == "mo-car3");
  CHECK(c.seed == 42);
  CHECK(c.mode == "weighted-sum-ablation");
  CHECK(c.deterministic);
  CHECK(c.n_experts == 3);
  REQUIRE(c.expert_omegas.size() == 3);
  CHECK(c.expert_omegas[1] == std::vector<double>{0.2, 0.5, 0.3});
  CHECK(c.expert_budget == 12345);
  CHECK(c.expert_episodes == 7);
  CHECK(c.eval_episodes == 3);
  CHECK(c.grid_points == 11);
  CHECK(c.grid_episodes == 2);
  CHECK(!c.with_baseline);
  CHECK(c.baseline_mixtures == 5);
  CHECK(c.baseline_budget == 999);
  CHECK(c.parirl.steps == 4);
  CHECK(c.parirl.step1_budget == 5000);
  CHECK(c.parirl.recursive_budget == 700);
  CHECK(c.parirl.dataset_episodes == 5);
  CHECK(c.parirl.small_c == 0.07);
  CHECK(c.parirl.reg.beta == 4.5);
  CHECK(c.parirl.reg.kind == DistanceKind::Mse);
  CHECK(c.parirl.reg.mode == RegMode::WeightedSum);
  CHECK(c.parirl.reg.n_eval == 64);
  CHECK(c.parirl.reg.n_canon == 256);
  CHECK(c.parirl.airl.ppo.lr == 0.001);
  CHECK(c.parirl.airl.ppo.epochs == 5);
  CHECK(c.parirl.airl.ppo.batch_steps == 1000);
  CHECK(c.parirl.airl.ppo.minibatches == 2);
  CHECK(c.parirl.airl.ppo.clip == 0.2);
  CHECK(c.parirl.airl.ppo.max_grad_norm == 1.5);
  CHECK(c.parirl.airl.ppo.gae_lambda == 0.9);
  CHECK(c.parirl.airl.ppo.entropy_coef == 0.02);
  CHECK(c.parirl.airl.ppo.vf_coef == 0.7);
  CHECK(c.parirl.airl.ppo.actor_hidden == std::vector<int>{8, 8});
  CHECK(c.parirl.airl.ppo.value_hidden == std::vector<int>{16});
  CHECK(c.parirl.airl.disc_lr == 0.002);
  CHECK(c.parirl.airl.disc_batch == 32);
  CHECK(c.parirl.airl.disc_epochs_per_update == 2);
  CHECK(c.parirl.airl.bc_steps == 100);
  CHECK(c.parirl.airl.divergence_loss_threshold == 25.0);
  CHECK(c.parirl.airl.divergence_patience == 3);
  CHECK(c.distill.lr == 0.0001);
  CHECK(c.distill.batch_per_demo == 8);
  CHECK(c.distill.steps == 200);
  CHECK(c.distill.denoise_steps == 10);
  CHECK(c.distill.hidden == std::vector<int>{64, 64});
  CHECK(c.guidance.delta == 0.8);
  CHECK(c.guidance.p_uncond == 0.1);
  CHECK(c.guidance.standard_convention);

  std::string d1 = dump_config(c);
  RunConfig c2 = parse_config_text(d1, "dump");
  std::string d2 = dump_config(c2);
  CHECK(d1 == d2);
  CHECK(c2.expert_omegas == c.expert_omegas);
  CHECK(c2.parirl.airl.ppo.actor_hidden == c.parirl.airl.ppo.actor_hidden);

  // The default config round-trips too, and validates.
  RunConfig def;
  RunConfig def2 = parse_config_text(dump_config(def), "defaults");
  CHECK(dump_config(def2) == dump_config(def));
  CHECK_NOTHROW(validate_config(def2));
}

TEST_CASE("config errors carry the origin and line number") {
  auto msg = [&](const std::string& text) {
    return message_of([&] { parse_config_text(text, "conf"); });
  };

  std::string m = msg("[run]\nseed = 1\nnope = 2\n");
  CHECK(m.find("conf:3") != std::string::npos);
  CHECK(m.find("nope") != std::string::npos);

  m = msg("[run]\nseed = 1\nseed = 2\n");
  CHECK(m.find("conf:3") != std::string::npos);
  CHECK(m.find("duplicate") != std::string::npos);

  m = msg("[wat]\n");
  CHECK(m.find("conf:1") != std::string::npos);
  CHECK(m.find("wat") != std::string::npos);

  m = msg("seed = 1\n");
  CHECK(m.find("before any section") != std::string::npos);

  m = msg("[run]\nseed = banana\n");
  CHECK(m.find("conf:2") != std::string::npos);

  m = msg("[run]\nexpert_omega_17 = 0.5, 0.5\n");
  CHECK(m.find("out of range") != std::string::npos);

  m = msg("[run]\nexpert_omega_1 = 1, 0\nexpert_omega_3 = 0, 1\n");
  CHECK(m.find("expert_omega_2") != std::string::npos);

  // Duplicate keys in different sections are distinct.
  CHECK_NOTHROW(parse_config_text("[ppo]\nlr = 0.1\n[distill]\nlr = 0.2\n", "conf"));
}

TEST_CASE("config validation rejects structural mistakes") {
  RunConfig good;
  CHECK_NOTHROW(validate_config(good));

  RunConfig c = good;
  c.env_id = "mo-flying-car";
  CHECK_THROWS_AS(validate_config(c), ConfigError);

  c = good;
  c.n_experts = 1;
  c.expert_omegas = {{0.9, 0.1}};
  CHECK_THROWS_AS(validate_config(c), ConfigError);

  c = good;
  c.expert_omegas = {{0.9, 0.1}, {0.4, 0.4}};  // not a simplex point
  CHECK_THROWS_AS(validate_config(c), ConfigError);

  c = good;
  c.expert_omegas = {{0.9, 0.1}, {0.5, 0.25, 0.25}};  // wrong width for mo-car
  CHECK_THROWS_AS(validate_config(c), ConfigError);

  c = good;
  c.mode = "pareto-magic";
  CHECK_THROWS_AS(validate_config(c), ConfigError);

  c = good;
  c.expert_budget = 0;
  CHECK_THROWS_AS(validate_config(c), ConfigError);

  c = good;
  c.grid_points = 1;
  CHECK_THROWS_AS(validate_config(c), ConfigError);

  c = good;
  c.guidance.p_uncond = 1.0;
  CHECK_THROWS_AS(validate_config(c), ConfigError);

  c = good;
  c.parirl.reg.beta = -1.0;
  CHECK_THROWS_AS(validate_config(c), ConfigError);
}

TEST_CASE("numbers print in shortest exact round-trip form") {
  CHECK(fmt_num(1.0) == "1");
  CHECK(fmt_num(0.1) == "0.1");
  CHECK(fmt_num(-2.5) == "-2.5");
  CHECK(fmt_num(3e-05) == "3e-05");
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-12, 12));
    CHECK(std::stod(fmt_num(v)) == v);
  }
}

TEST_CASE("trajectory files round-trip exactly and validate structure") {
  fs::path dir = fresh_dir("parirl-trajfile-test");
  std::string path = (dir / "data.jsonl").string();

  Dataset ds;
  ds.env_id = "mo-car";
  ds.policy_id = "unit-test";
  ds.seed = 31;
  ds.created = "2026-08-16T00:00:00Z";
  Rng rng(31);
  for (int i = 0; i < 10000; ++i) {
    ds.t.push_back(i % 200);
    double x = rng.uniform(-100, 100), v = rng.uniform(-5, 5);
    ds.records.push_back({{x, v}, {rng.normal()}, {x + 0.1 * v, v}});
  }
  // Values that stress the serializer.
  ds.t.push_back(0);
  ds.records.push_back({{1.0 / 3.0, -0.0}, {1e-17}, {-1e300, 5.0}});

  write_trajectory_file(path, ds);
  Dataset back = read_trajectory_file(path);
  CHECK(back.env_id == ds.env_id);
  CHECK(back.policy_id == ds.policy_id);
  CHECK(back.seed == ds.seed);
  CHECK(back.created == ds.created);
  REQUIRE(back.records.size() == ds.records.size());
  CHECK(back.t == ds.t);
  for (size_t i = 0; i < ds.records.size(); ++i) {
    CHECK(back.records[i].s == ds.records[i].s);
    CHECK(back.records[i].a == ds.records[i].a);
    CHECK(back.records[i].s_next == ds.records[i].s_next);
  }

  SUBCASE("record before header is rejected") {
    std::string bad = (dir / "headerless.jsonl").string();
    write_text_file(bad,
                    "{\"t\":0,\"s\":[0,0],\"a\":[0],\"s_next\":[0,0]}\n"
                    "{\"env\":\"mo-car\",\"policy_id\":\"x\",\"seed\":1,\"created\":\"z\"}\n");
    CHECK_THROWS_AS(read_trajectory_file(bad), TrajfileError);
  }

  SUBCASE("dimension mismatches are rejected with the line number") {
    std::string bad = (dir / "dims.jsonl").string();
    write_text_file(bad,
                    "{\"env\":\"mo-car\",\"policy_id\":\"x\",\"seed\":1,\"created\":\"z\"}\n"
                    "{\"t\":0,\"s\":[0,0,0],\"a\":[0],\"s_next\":[0,0]}\n");
    std::string m = message_of([&] { read_trajectory_file(bad); });
    CHECK(m.find(":2") != std::string::npos);
    CHECK(m.find("mo-car") != std::string::npos);
  }

  SUBCASE("fractional timestep is rejected") {
    std::string bad = (dir / "frac.jsonl").string();
    write_text_file(bad,
                    "{\"env\":\"mo-car\",\"policy_id\":\"x\",\"seed\":1,\"created\":\"z\"}\n"
                    "{\"t\":0.5,\"s\":[0,0],\"a\":[0],\"s_next\":[0,0]}\n");
    CHECK_THROWS_AS(read_trajectory_file(bad), TrajfileError);
  }

  SUBCASE("empty file is rejected") {
    std::string bad = (dir / "empty.jsonl").string();
    write_text_file(bad, "");
    CHECK_THROWS_AS(read_trajectory_file(bad), TrajfileError);
  }

  fs::remove_all(dir);
}

TEST_CASE("front csv round-trips annotations and returns exactly") {
  std::vector<FrontPoint> front{
      {{43.625, 12.5}, "g1-b0", {1.0, 0.0}},
      {{0.125, 60.0}, "g1-b1", {0.0, 1.0}},
      {{21.0, 30.0}, "mix-3", {}},
  };
  std::string csv = front_csv(front);
  CHECK(csv.rfind("policy_id,omega,r1,r2\n", 0) == 0);
  std::vector<FrontPoint> back = parse_front_csv(csv, "test");
  REQUIRE(back.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back[i].policy_id == front[i].policy_id);
    CHECK(back[i].omega == front[i].omega);
    CHECK(back[i].returns == front[i].returns);
  }
  CHECK_THROWS(parse_front_csv("id,omega,r1\nx,,1\n", "test"));
  CHECK_THROWS(parse_front_csv("policy_id,omega,r1,r2\nx,0.5;0.5,1\n", "test"));
}

TEST_CASE("report csv formats are frozen") {
  MetricRow row{"mo-car/parirl", 7, "hv", 5.375, {-0.1, 9.0}, 12, 1};
  CHECK(metrics_csv({row}) ==
        "run_id,seed,metric,value,r0,n_points,n_excluded\n"
        "mo-car/parirl,7,hv,5.375,-0.1;9,12,1\n");

  StepDiagnostics d;
  d.step = 2;
  d.branch = 1;
  d.budget = 0.4;
  d.targets = {0.35, 0.05};
  d.measured = {0.3, 0.1};
  d.reg_term = 0.005;
  d.regret = 0.25;
  d.fork_distance = 0.0;
  d.env_steps = 2500;
  CHECK(diagnostics_csv({d}) ==
        "step,branch,budget,targets,measured,reg_term,regret,fork_distance,env_steps\n"
        "2,1,0.4,0.35;0.05,0.3;0.1,0.005,0.25,0,2500\n");

  CHECK(distance_matrix_csv({"a", "b"}, {{0.0, 0.5}, {0.5, 0.0}}) ==
        "reward_id,a,b\n"
        "a,0,0.5\n"
        "b,0.5,0\n");
}

TEST_CASE("scatter svg encodes series markers and annotation colors") {
  ScatterSeries s1{"parirl", {{{1.0, 2.0}, "a", {1.0, 0.0}}, {{2.0, 1.0}, "b", {0.0, 1.0}}}};
  ScatterSeries s2{"baseline", {{{1.5, 1.5}, "c", {}}}};
  std::string svg = scatter_svg({s1, s2});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("objective 1 return") != std::string::npos);
  CHECK(svg.find("objective 2 return") != std::string::npos);
  CHECK(svg.find("<circle") != std::string::npos);  // series 0 marker
  CHECK(svg.find("<rect x=") != std::string::npos);  // series 1 marker
  CHECK(svg.find("#f02828") != std::string::npos);   // omega1 = 1 -> red
  CHECK(svg.find("#2828f0") != std::string::npos);   // omega1 = 0 -> blue
  CHECK(svg.find("#888888") != std::string::npos);   // unannotated grey
  CHECK(svg.find(">parirl</text>") != std::string::npos);
  CHECK(svg.find(">baseline</text>") != std::string::npos);
}

TEST_CASE("the pipeline writes a complete, byte-deterministic run directory") {
  RunConfig cfg;
  cfg.env_id = "mo-car";
  cfg.seed = 5;
  cfg.deterministic = true;
  cfg.expert_budget = 2048;
  cfg.expert_episodes = 3;
  cfg.eval_episodes = 2;
  cfg.grid_points = 5;
  cfg.grid_episodes = 1;
  cfg.baseline_mixtures = 2;
  cfg.baseline_budget = 1024;
  cfg.parirl.steps = 2;
  cfg.parirl.step1_budget = 2048;
  cfg.parirl.recursive_budget = 512;
  cfg.parirl.dataset_episodes = 2;
  cfg.parirl.reg.n_eval = 32;
  cfg.parirl.reg.n_canon = 32;
  cfg.parirl.airl.ppo.batch_steps = 512;
  cfg.parirl.airl.ppo.epochs = 3;
  cfg.parirl.airl.ppo.minibatches = 2;
  cfg.parirl.airl.bc_steps = 50;
  cfg.distill.steps = 50;
  cfg.distill.batch_per_demo = 8;
  cfg.distill.denoise_steps = 10;
  cfg.distill.hidden = {64, 64};
  cfg.guidance.standard_convention = true;
  validate_config(cfg);

  fs::path run1 = fresh_dir("parirl-pipe-1");
  fs::path run2 = fresh_dir("parirl-pipe-2");
  ReportResult rep1 = run_pipeline(cfg, run1.string());
  ReportResult rep2 = run_pipeline(cfg, run2.string());

  for (const char* f :
       {"config.txt", "experts/expert_1.jsonl", "experts/expert_2.jsonl", "experts/experts.csv",
        "pareto_front.csv", "diagnostics.csv", "distances.csv", "baseline_front.csv",
        "distill.ckpt", "distill.json", "du_front.csv", "metrics.csv", "scatter.svg"})
    CHECK(fs::exists(run1 / f));
  for (const char* b : {"g1-b0", "g1-b1", "g2-b0", "g2-b1"}) {
    CHECK(fs::exists(run1 / "branches" / b / "policy.ckpt"));
    CHECK(fs::exists(run1 / "branches" / b / "disc_g.ckpt"));
    CHECK(fs::exists(run1 / "branches" / b / "meta.json"));
    CHECK(fs::exists(run1 / "branches" / b / "dataset.jsonl"));
  }

  // Identical configs must yield identical bytes everywhere.
  std::set<fs::path> rel1, rel2;
  for (const auto& e : fs::recursive_directory_iterator(run1))
    if (e.is_regular_file()) rel1.insert(fs::relative(e.path(), run1));
  for (const auto& e : fs::recursive_directory_iterator(run2))
    if (e.is_regular_file()) rel2.insert(fs::relative(e.path(), run2));
  CHECK(rel1 == rel2);
  for (const fs::path& rel : rel1)
    CHECK_MESSAGE(read_text_file((run1 / rel).string()) == read_text_file((run2 / rel).string()),
                  "file differs between runs: ", rel.string());

  // Report rows cover all three series with one shared reference point.
  REQUIRE(rep1.r0.size() == 2);
  std::set<std::string> run_ids;
  for (const MetricRow& r : rep1.rows) run_ids.insert(r.run_id);
  CHECK(run_ids.count("mo-car/parirl") == 1);
  CHECK(run_ids.count("mo-car/parirl-du") == 1);
  CHECK(run_ids.count("mo-car/baseline") == 1);
  for (const MetricRow& r : rep1.rows)
    if (r.metric == "hv") CHECK(r.r0 == rep1.r0);
  CHECK(metrics_csv(rep1.rows) == metrics_csv(rep2.rows));

  // The distilled model reloads and evaluates deterministically.
  FrontPoint once = eval_distilled_once(cfg, run1.string(), {0.5, 0.5});
  FrontPoint again = eval_distilled_once(cfg, run1.string(), {0.5, 0.5});
  CHECK(once.returns == again.returns);
  std::vector<FrontPoint> du =
      parse_front_csv(read_text_file((run1 / "du_front.csv").string()), "du");
  CHECK(du.size() == 5);
  for (const FrontPoint& p : du) {
    REQUIRE(p.omega.size() == 2);
    CHECK(p.omega[0] + p.omega[1] == doctest::Approx(1.0).epsilon(1e-12));
  }

  fs::remove_all(run1);
  fs::remove_all(run2);
}
