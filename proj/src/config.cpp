#include "parirl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace parirl {

std::string fmt_num(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Parser {
  std::string origin;
  int line_no = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + msg);
  }

  double num(const std::string& v) const {
    try {
      size_t pos = 0;
      double d = std::stod(v, &pos);
      if (pos != v.size()) fail("trailing characters in number '" + v + "'");
      return d;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      fail("invalid number '" + v + "'");
    }
  }

  long integer(const std::string& v) const {
    try {
      size_t pos = 0;
      long d = std::stol(v, &pos);
      if (pos != v.size()) fail("trailing characters in integer '" + v + "'");
      return d;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      fail("invalid integer '" + v + "'");
    }
  }

  uint64_t uinteger(const std::string& v) const {
    try {
      size_t pos = 0;
      uint64_t d = std::stoull(v, &pos);
      if (pos != v.size()) fail("trailing characters in integer '" + v + "'");
      return d;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      fail("invalid unsigned integer '" + v + "'");
    }
  }

  bool boolean(const std::string& v) const {
    if (v == "true") return true;
    if (v == "false") return false;
    fail("expected true or false, got '" + v + "'");
  }

  std::vector<double> num_list(const std::string& v) const {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(num(trim(item)));
    if (out.empty()) fail("empty list");
    return out;
  }

  std::vector<int> int_list(const std::string& v) const {
    std::vector<int> out;
    for (double d : num_list(v)) {
      if (d != std::floor(d)) fail("expected integer list entry");
      out.push_back(static_cast<int>(d));
    }
    return out;
  }
};

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  cfg.expert_omegas.clear();
  std::vector<std::pair<int, std::vector<double>>> omegas;  // (index, value)

  Parser p{origin};
  std::string section;
  std::istringstream in(text);
  std::string raw;
  std::vector<std::string> seen;
  bool experts_set = false;

  while (std::getline(in, raw)) {
    ++p.line_no;
    std::string line = trim(raw);
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') p.fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "run" && section != "parirl" && section != "reg" && section != "ppo" &&
          section != "airl" && section != "distill")
        p.fail("unknown section [" + section + "]");
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) p.fail("expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) p.fail("empty key");
    if (section.empty()) p.fail("key '" + key + "' before any section header");
    std::string full = section + "." + key;
    for (const std::string& s : seen)
      if (s == full) p.fail("duplicate key '" + full + "'");
    seen.push_back(full);

    if (section == "run") {
      if (key == "env") cfg.env_id = val;
      else if (key == "seed") cfg.seed = p.uinteger(val);
      else if (key == "mode") cfg.mode = val;
      else if (key == "deterministic") cfg.deterministic = p.boolean(val);
      else if (key == "experts") { cfg.n_experts = static_cast<int>(p.integer(val)); experts_set = true; }
      else if (key.rfind("expert_omega_", 0) == 0) {
        int idx = static_cast<int>(p.integer(key.substr(13)));
        if (idx < 1 || idx > 16) p.fail("expert omega index out of range");
        omegas.emplace_back(idx, p.num_list(val));
      }
      else if (key == "expert_budget") cfg.expert_budget = p.integer(val);
      else if (key == "expert_episodes") cfg.expert_episodes = static_cast<int>(p.integer(val));
      else if (key == "eval_episodes") cfg.eval_episodes = static_cast<int>(p.integer(val));
      else if (key == "grid_points") cfg.grid_points = static_cast<int>(p.integer(val));
      else if (key == "grid_episodes") cfg.grid_episodes = static_cast<int>(p.integer(val));
      else if (key == "with_baseline") cfg.with_baseline = p.boolean(val);
      else if (key == "baseline_mixtures") cfg.baseline_mixtures = static_cast<int>(p.integer(val));
      else if (key == "baseline_budget") cfg.baseline_budget = p.integer(val);
      else p.fail("unknown key '" + full + "'");
    } else if (section == "parirl") {
      if (key == "steps") cfg.parirl.steps = static_cast<int>(p.integer(val));
      else if (key == "step1_budget") cfg.parirl.step1_budget = p.integer(val);
      else if (key == "recursive_budget") cfg.parirl.recursive_budget = p.integer(val);
      else if (key == "dataset_episodes") cfg.parirl.dataset_episodes = static_cast<int>(p.integer(val));
      else if (key == "small_c") cfg.parirl.small_c = p.num(val);
      else p.fail("unknown key '" + full + "'");
    } else if (section == "reg") {
      if (key == "beta") cfg.parirl.reg.beta = p.num(val);
      else if (key == "kind") {
        if (val == "epic") cfg.parirl.reg.kind = DistanceKind::Epic;
        else if (val == "mse") cfg.parirl.reg.kind = DistanceKind::Mse;
        else p.fail("reg.kind must be epic or mse");
      }
      else if (key == "mode") {
        if (val == "target-distance") cfg.parirl.reg.mode = RegMode::TargetDistance;
        else if (val == "weighted-sum") cfg.parirl.reg.mode = RegMode::WeightedSum;
        else p.fail("reg.mode must be target-distance or weighted-sum");
      }
      else if (key == "n_eval") cfg.parirl.reg.n_eval = static_cast<int>(p.integer(val));
      else if (key == "n_canon") cfg.parirl.reg.n_canon = static_cast<int>(p.integer(val));
      else p.fail("unknown key '" + full + "'");
    } else if (section == "ppo") {
      PpoConfig& ppo = cfg.parirl.airl.ppo;
      if (key == "lr") ppo.lr = p.num(val);
      else if (key == "epochs") ppo.epochs = static_cast<int>(p.integer(val));
      else if (key == "batch_steps") ppo.batch_steps = static_cast<int>(p.integer(val));
      else if (key == "minibatches") ppo.minibatches = static_cast<int>(p.integer(val));
      else if (key == "clip") ppo.clip = p.num(val);
      else if (key == "max_grad_norm") ppo.max_grad_norm = p.num(val);
      else if (key == "gae_lambda") ppo.gae_lambda = p.num(val);
      else if (key == "entropy_coef") ppo.entropy_coef = p.num(val);
      else if (key == "vf_coef") ppo.vf_coef = p.num(val);
      else if (key == "actor_hidden") ppo.actor_hidden = p.int_list(val);
      else if (key == "value_hidden") ppo.value_hidden = p.int_list(val);
      else p.fail("unknown key '" + full + "'");
    } else if (section == "airl") {
      AirlConfig& airl = cfg.parirl.airl;
      if (key == "disc_lr") airl.disc_lr = p.num(val);
      else if (key == "disc_batch") airl.disc_batch = static_cast<int>(p.integer(val));
      else if (key == "disc_epochs") airl.disc_epochs_per_update = static_cast<int>(p.integer(val));
      else if (key == "bc_steps") airl.bc_steps = static_cast<int>(p.integer(val));
      else if (key == "divergence_threshold") airl.divergence_loss_threshold = p.num(val);
      else if (key == "divergence_patience") airl.divergence_patience = static_cast<int>(p.integer(val));
      else p.fail("unknown key '" + full + "'");
    } else if (section == "distill") {
      if (key == "lr") cfg.distill.lr = p.num(val);
      else if (key == "batch_per_demo") cfg.distill.batch_per_demo = static_cast<int>(p.integer(val));
      else if (key == "steps") cfg.distill.steps = static_cast<int>(p.integer(val));
      else if (key == "denoise_steps") cfg.distill.denoise_steps = static_cast<int>(p.integer(val));
      else if (key == "hidden") cfg.distill.hidden = p.int_list(val);
      else if (key == "delta") cfg.guidance.delta = p.num(val);
      else if (key == "p_uncond") cfg.guidance.p_uncond = p.num(val);
      else if (key == "guidance_convention") {
        if (val == "literal") cfg.guidance.standard_convention = false;
        else if (val == "standard") cfg.guidance.standard_convention = true;
        else p.fail("guidance_convention must be literal or standard");
      }
      else p.fail("unknown key '" + full + "'");
    }
  }

  if (cfg.expert_omegas.empty() && omegas.empty()) {
    cfg.expert_omegas = {{0.9, 0.1}, {0.1, 0.9}};
  }
  if (!omegas.empty()) {
    int max_idx = 0;
    for (const auto& [idx, v] : omegas) max_idx = std::max(max_idx, idx);
    cfg.expert_omegas.assign(max_idx, {});
    for (const auto& [idx, v] : omegas) cfg.expert_omegas[idx - 1] = v;
    for (int i = 0; i < max_idx; ++i)
      if (cfg.expert_omegas[i].empty())
        throw ConfigError(origin + ": expert_omega_" + std::to_string(i + 1) + " missing");
  }
  if (!experts_set) cfg.n_experts = static_cast<int>(cfg.expert_omegas.size());
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

namespace {

std::string join_nums(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt_num(v[i]);
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

std::string dump_config(const RunConfig& cfg) {
  std::string s;
  s += "[run]\n";
  s += "env = " + cfg.env_id + "\n";
  s += "seed = " + std::to_string(cfg.seed) + "\n";
  s += "mode = " + cfg.mode + "\n";
  s += std::string("deterministic = ") + (cfg.deterministic ? "true" : "false") + "\n";
  s += "experts = " + std::to_string(cfg.n_experts) + "\n";
  for (size_t i = 0; i < cfg.expert_omegas.size(); ++i)
    s += "expert_omega_" + std::to_string(i + 1) + " = " + join_nums(cfg.expert_omegas[i]) + "\n";
  s += "expert_budget = " + std::to_string(cfg.expert_budget) + "\n";
  s += "expert_episodes = " + std::to_string(cfg.expert_episodes) + "\n";
  s += "eval_episodes = " + std::to_string(cfg.eval_episodes) + "\n";
  s += "grid_points = " + std::to_string(cfg.grid_points) + "\n";
  s += "grid_episodes = " + std::to_string(cfg.grid_episodes) + "\n";
  s += std::string("with_baseline = ") + (cfg.with_baseline ? "true" : "false") + "\n";
  s += "baseline_mixtures = " + std::to_string(cfg.baseline_mixtures) + "\n";
  s += "baseline_budget = " + std::to_string(cfg.baseline_budget) + "\n";
  s += "\n[parirl]\n";
  s += "steps = " + std::to_string(cfg.parirl.steps) + "\n";
  s += "step1_budget = " + std::to_string(cfg.parirl.step1_budget) + "\n";
  s += "recursive_budget = " + std::to_string(cfg.parirl.recursive_budget) + "\n";
  s += "dataset_episodes = " + std::to_string(cfg.parirl.dataset_episodes) + "\n";
  s += "small_c = " + fmt_num(cfg.parirl.small_c) + "\n";
  s += "\n[reg]\n";
  s += "beta = " + fmt_num(cfg.parirl.reg.beta) + "\n";
  s += std::string("kind = ") + (cfg.parirl.reg.kind == DistanceKind::Epic ? "epic" : "mse") + "\n";
  s += std::string("mode = ") +
       (cfg.parirl.reg.mode == RegMode::TargetDistance ? "target-distance" : "weighted-sum") + "\n";
  s += "n_eval = " + std::to_string(cfg.parirl.reg.n_eval) + "\n";
  s += "n_canon = " + std::to_string(cfg.parirl.reg.n_canon) + "\n";
  const PpoConfig& ppo = cfg.parirl.airl.ppo;
  s += "\n[ppo]\n";
  s += "lr = " + fmt_num(ppo.lr) + "\n";
  s += "epochs = " + std::to_string(ppo.epochs) + "\n";
  s += "batch_steps = " + std::to_string(ppo.batch_steps) + "\n";
  s += "minibatches = " + std::to_string(ppo.minibatches) + "\n";
  s += "clip = " + fmt_num(ppo.clip) + "\n";
  s += "max_grad_norm = " + fmt_num(ppo.max_grad_norm) + "\n";
  s += "gae_lambda = " + fmt_num(ppo.gae_lambda) + "\n";
  s += "entropy_coef = " + fmt_num(ppo.entropy_coef) + "\n";
  s += "vf_coef = " + fmt_num(ppo.vf_coef) + "\n";
  s += "actor_hidden = " + join_ints(ppo.actor_hidden) + "\n";
  s += "value_hidden = " + join_ints(ppo.value_hidden) + "\n";
  const AirlConfig& airl = cfg.parirl.airl;
  s += "\n[airl]\n";
  s += "disc_lr = " + fmt_num(airl.disc_lr) + "\n";
  s += "disc_batch = " + std::to_string(airl.disc_batch) + "\n";
  s += "disc_epochs = " + std::to_string(airl.disc_epochs_per_update) + "\n";
  s += "bc_steps = " + std::to_string(airl.bc_steps) + "\n";
  s += "divergence_threshold = " + fmt_num(airl.divergence_loss_threshold) + "\n";
  s += "divergence_patience = " + std::to_string(airl.divergence_patience) + "\n";
  s += "\n[distill]\n";
  s += "lr = " + fmt_num(cfg.distill.lr) + "\n";
  s += "batch_per_demo = " + std::to_string(cfg.distill.batch_per_demo) + "\n";
  s += "steps = " + std::to_string(cfg.distill.steps) + "\n";
  s += "denoise_steps = " + std::to_string(cfg.distill.denoise_steps) + "\n";
  s += "hidden = " + join_ints(cfg.distill.hidden) + "\n";
  s += "delta = " + fmt_num(cfg.guidance.delta) + "\n";
  s += "p_uncond = " + fmt_num(cfg.guidance.p_uncond) + "\n";
  s += std::string("guidance_convention = ") +
       (cfg.guidance.standard_convention ? "standard" : "literal") + "\n";
  return s;
}

void validate_config(const RunConfig& cfg) {
  MoEnv env = [&] {
    try {
      return MoEnv::make(cfg.env_id);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("invalid env: ") + e.what());
    }
  }();
  int m = env.spec().n_objectives;
  if (cfg.n_experts < 2) throw ConfigError("experts must be >= 2");
  if (static_cast<int>(cfg.expert_omegas.size()) != cfg.n_experts)
    throw ConfigError("expected " + std::to_string(cfg.n_experts) + " expert omegas, got " +
                      std::to_string(cfg.expert_omegas.size()));
  for (const auto& w : cfg.expert_omegas) {
    if (static_cast<int>(w.size()) != m)
      throw ConfigError("expert omega dimension differs from env objectives");
    double sum = 0.0;
    for (double v : w) {
      if (v < 0.0) throw ConfigError("expert omega has a negative entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("expert omega does not sum to 1");
  }
  if (cfg.mode != "parirl" && cfg.mode != "weighted-sum-ablation" &&
      cfg.mode != "mixed-airl-baseline" && cfg.mode != "distill" && cfg.mode != "eval")
    throw ConfigError("unknown mode '" + cfg.mode + "'");
  if (cfg.parirl.steps < 1) throw ConfigError("parirl.steps must be >= 1");
  if (cfg.expert_budget < 1 || cfg.parirl.step1_budget < 1)
    throw ConfigError("budgets must be positive");
  if (cfg.expert_episodes < 1 || cfg.eval_episodes < 1 || cfg.grid_episodes < 1 ||
      cfg.parirl.dataset_episodes < 1)
    throw ConfigError("episode counts must be positive");
  if (cfg.grid_points < 2) throw ConfigError("grid_points must be >= 2");
  if (cfg.parirl.reg.n_eval < 2 || cfg.parirl.reg.n_canon < 1)
    throw ConfigError("reg batch sizes too small");
  if (cfg.parirl.reg.beta < 0.0) throw ConfigError("reg.beta must be >= 0");
  if (cfg.guidance.p_uncond < 0.0 || cfg.guidance.p_uncond >= 1.0)
    throw ConfigError("p_uncond must be in [0,1)");
  if (cfg.distill.denoise_steps < 1) throw ConfigError("denoise_steps must be >= 1");
  if (cfg.distill.steps < 1 || cfg.distill.batch_per_demo < 1)
    throw ConfigError("distill steps and batch must be positive");
}

}  // namespace parirl
