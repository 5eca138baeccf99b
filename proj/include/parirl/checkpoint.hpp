#pragma once

#include <string>
#include <vector>

#include "parirl/common.hpp"

namespace parirl {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Layout: "PIRC" | u32 version | u64 spec_hash | u64 count | count f64 values |
// u32 crc32 of everything before it. All integers and doubles little-endian.
void save_params(const std::string& path, uint64_t spec_hash, const std::vector<double>& params);

// Verifies magic, version, spec hash and CRC; throws CheckpointError otherwise.
std::vector<double> load_params(const std::string& path, uint64_t expected_spec_hash);

}  // namespace parirl
