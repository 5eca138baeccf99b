#include "parirl/trajfile.hpp"

#include <fstream>

#include "json.hpp"

namespace parirl {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json vec_json(const std::vector<double>& v) {
  ordered_json arr = ordered_json::array();
  for (double x : v) arr.push_back(x);
  return arr;
}

std::vector<double> json_vec(const ordered_json& j, const char* key, size_t line) {
  if (!j.contains(key) || !j[key].is_array())
    throw TrajfileError("line " + std::to_string(line) + ": missing array field '" + key + "'");
  std::vector<double> out;
  out.reserve(j[key].size());
  for (const auto& x : j[key]) {
    if (!x.is_number())
      throw TrajfileError("line " + std::to_string(line) + ": non-numeric entry in '" + key + "'");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

void write_trajectory_file(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TrajfileError("cannot open '" + path + "' for writing");
  ordered_json header;
  header["env"] = ds.env_id;
  header["policy_id"] = ds.policy_id;
  header["seed"] = ds.seed;
  header["created"] = ds.created;
  out << header.dump() << "\n";
  if (ds.t.size() != ds.records.size())
    throw TrajfileError("dataset timestep column length differs from record count");
  for (size_t i = 0; i < ds.records.size(); ++i) {
    const Transition& tr = ds.records[i];
    ordered_json rec;
    rec["t"] = ds.t[i];
    rec["s"] = vec_json(tr.s);
    rec["a"] = vec_json(tr.a);
    rec["s_next"] = vec_json(tr.s_next);
    out << rec.dump() << "\n";
  }
  if (!out) throw TrajfileError("write failed for '" + path + "'");
}

Dataset read_trajectory_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TrajfileError("cannot open '" + path + "'");
  std::string line;
  size_t line_no = 0;
  Dataset ds;
  bool have_header = false;
  int state_dim = -1, action_dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw TrajfileError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!have_header) {
      if (!j.contains("env") || !j.contains("policy_id") || !j.contains("seed") ||
          !j.contains("created"))
        throw TrajfileError(path + ": first record is not a header");
      ds.env_id = j["env"].get<std::string>();
      ds.policy_id = j["policy_id"].get<std::string>();
      ds.seed = j["seed"].get<uint64_t>();
      ds.created = j["created"].get<std::string>();
      const EnvSpec spec = MoEnv::make(ds.env_id).spec();
      state_dim = spec.state_dim;
      action_dim = spec.action_dim;
      have_header = true;
      continue;
    }
    if (!j.contains("t") || !j["t"].is_number_integer())
      throw TrajfileError(path + ":" + std::to_string(line_no) + ": missing integer field 't'");
    Transition tr;
    tr.s = json_vec(j, "s", line_no);
    tr.a = json_vec(j, "a", line_no);
    tr.s_next = json_vec(j, "s_next", line_no);
    if (static_cast<int>(tr.s.size()) != state_dim ||
        static_cast<int>(tr.s_next.size()) != state_dim ||
        static_cast<int>(tr.a.size()) != action_dim)
      throw TrajfileError(path + ":" + std::to_string(line_no) +
                          ": record dims do not match env '" + ds.env_id + "'");
    ds.t.push_back(j["t"].get<int>());
    ds.records.push_back(std::move(tr));
  }
  if (!have_header) throw TrajfileError(path + ": empty trajectory file");
  return ds;
}

}  // namespace parirl
