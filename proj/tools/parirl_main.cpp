#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "parirl/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string env_id;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  bool env_set = false;
  bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "configuration file (key = value sections)");
  cmd->add_option("--seed", args.seed, "master seed override")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--env", args.env_id, "environment id override")
      ->each([&args](const std::string&) { args.env_set = true; });
  cmd->add_option("--out", args.out_dir, "run directory (default runs/<env>-s<seed>)");
  cmd->add_flag("--deterministic", args.deterministic,
                "fixed timestamps so artifacts are byte-reproducible");
}

parirl::RunConfig resolve_config(const CommonArgs& args) {
  parirl::RunConfig cfg;
  if (!args.config_path.empty()) cfg = parirl::parse_config_file(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (args.env_set) cfg.env_id = args.env_id;
  if (args.deterministic) cfg.deterministic = true;
  parirl::validate_config(cfg);
  return cfg;
}

std::string resolve_out(const CommonArgs& args, const parirl::RunConfig& cfg) {
  if (!args.out_dir.empty()) return args.out_dir;
  return "runs/" + cfg.env_id + "-s" + std::to_string(cfg.seed);
}

std::vector<double> parse_omega(const std::string& text) {
  std::vector<double> out;
  std::string cur;
  for (char c : text + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(std::stod(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pareto policy-set inverse RL: training, distillation and reporting"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string omega_text;

  CLI::App* c_gen = app.add_subcommand("gen-experts", "train scalarized experts and persist demonstrations");
  CLI::App* c_train = app.add_subcommand("train", "run the recursive reward-regularized IRL loop");
  CLI::App* c_base = app.add_subcommand("baseline", "train AIRL on ratio-mixed datasets at matched policy count");
  CLI::App* c_dist = app.add_subcommand("distill", "train the preference-conditioned diffusion policy");
  CLI::App* c_eval = app.add_subcommand("eval", "evaluate the distilled policy (one omega or a grid)");
  CLI::App* c_rep = app.add_subcommand("report", "compute front metrics and the scatter figure");
  for (CLI::App* c : {c_gen, c_train, c_base, c_dist, c_eval, c_rep}) add_common(c, args);
  c_eval->add_option("--omega", omega_text, "preference weights w1,w2[,w3]; omit to sweep the grid");

  CLI11_PARSE(app, argc, argv);

  try {
    parirl::RunConfig cfg = resolve_config(args);
    std::string out = resolve_out(args, cfg);
    if (c_gen->parsed()) {
      parirl::gen_experts(cfg, out);
      std::printf("experts written to %s/experts\n", out.c_str());
    } else if (c_train->parsed()) {
      parirl::TrainResult res = parirl::run_train(cfg, out);
      std::printf("learned %zu policies; front at %s/pareto_front.csv\n", res.front.size(),
                  out.c_str());
    } else if (c_base->parsed()) {
      std::vector<parirl::FrontPoint> front = parirl::run_baseline(cfg, out);
      std::printf("baseline trained %zu mixtures; front at %s/baseline_front.csv\n", front.size(),
                  out.c_str());
    } else if (c_dist->parsed()) {
      parirl::run_distill(cfg, out);
      std::printf("distilled policy at %s/distill.ckpt\n", out.c_str());
    } else if (c_eval->parsed()) {
      if (!omega_text.empty()) {
        parirl::FrontPoint fp = parirl::eval_distilled_once(cfg, out, parse_omega(omega_text));
        std::string line;
        for (size_t i = 0; i < fp.returns.size(); ++i)
          line += (i ? "," : "") + parirl::fmt_num(fp.returns[i]);
        std::printf("returns %s\n", line.c_str());
      } else {
        std::vector<parirl::FrontPoint> grid = parirl::eval_distilled_grid(cfg, out);
        std::printf("evaluated %zu grid preferences; front at %s/du_front.csv\n", grid.size(),
                    out.c_str());
      }
    } else if (c_rep->parsed()) {
      parirl::ReportResult res = parirl::run_report(cfg, out);
      for (const parirl::MetricRow& r : res.rows)
        std::printf("%s %s = %s\n", r.run_id.c_str(), r.metric.c_str(),
                    parirl::fmt_num(r.value).c_str());
    }
  } catch (const parirl::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const parirl::DivergenceError& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return 3;
  } catch (const parirl::GradientError& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
