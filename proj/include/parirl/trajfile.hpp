#pragma once

#include <string>

#include "parirl/envs.hpp"

namespace parirl {

class TrajfileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Line-delimited JSON: one header object {env, policy_id, seed, created}
// followed by one object {t, s, a, s_next} per transition.
void write_trajectory_file(const std::string& path, const Dataset& ds);

// Validates header-first ordering and per-record dims against the named env.
Dataset read_trajectory_file(const std::string& path);

}  // namespace parirl
