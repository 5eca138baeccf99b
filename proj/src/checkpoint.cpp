#include "parirl/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace parirl {

namespace {

constexpr char kMagic[4] = {'P', 'I', 'R', 'C'};
constexpr uint32_t kVersion = 1;

void put_u32(std::vector<unsigned char>& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_u64(std::vector<unsigned char>& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

uint32_t get_u32(const unsigned char* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
  return v;
}

uint64_t get_u64(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void save_params(const std::string& path, uint64_t spec_hash, const std::vector<double>& params) {
  std::vector<unsigned char> buf;
  buf.reserve(24 + params.size() * 8 + 4);
  for (char c : kMagic) buf.push_back(static_cast<unsigned char>(c));
  put_u32(buf, kVersion);
  put_u64(buf, spec_hash);
  put_u64(buf, static_cast<uint64_t>(params.size()));
  for (double d : params) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(buf, bits);
  }
  put_u32(buf, crc32(buf.data(), buf.size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot open for write: " + path);
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) throw CheckpointError("write failed: " + path);
}

std::vector<double> load_params(const std::string& path, uint64_t expected_spec_hash) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open: " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 28) throw CheckpointError("truncated checkpoint: " + path);

  if (std::memcmp(buf.data(), kMagic, 4) != 0)
    throw CheckpointError("bad magic in " + path);
  uint32_t version = get_u32(buf.data() + 4);
  if (version != kVersion)
    throw CheckpointError("unsupported version " + std::to_string(version) + " in " + path);
  uint64_t spec_hash = get_u64(buf.data() + 8);
  if (spec_hash != expected_spec_hash)
    throw CheckpointError("spec hash mismatch in " + path);
  uint64_t count = get_u64(buf.data() + 16);
  size_t expect = 24 + count * 8 + 4;
  if (buf.size() != expect) throw CheckpointError("truncated checkpoint: " + path);

  uint32_t stored_crc = get_u32(buf.data() + buf.size() - 4);
  uint32_t actual_crc = crc32(buf.data(), buf.size() - 4);
  if (stored_crc != actual_crc) throw CheckpointError("CRC mismatch in " + path);

  std::vector<double> params(count);
  for (uint64_t i = 0; i < count; ++i) {
    uint64_t bits = get_u64(buf.data() + 24 + i * 8);
    std::memcpy(&params[i], &bits, 8);
  }
  return params;
}

}  // namespace parirl
