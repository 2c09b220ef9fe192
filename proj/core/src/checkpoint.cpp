#include "plumerl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace plumerl {

namespace {

constexpr char kMagic[8] = {'P', 'L', 'M', 'C', 'K', 'P', 'T', '1'};

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("checkpoint: " + msg);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) fail("truncated u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& out, double d) {
  const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

double read_f64(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) fail("truncated f64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

} // namespace

void save_checkpoint(const CheckpointBlocks& ckpt, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, static_cast<std::uint32_t>(ckpt.metadata.size()));
  out.write(ckpt.metadata.data(), static_cast<std::streamsize>(ckpt.metadata.size()));
  write_u32(out, static_cast<std::uint32_t>(ckpt.blocks.size()));
  for (const auto& [name, t] : ckpt.blocks) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<std::uint32_t>(t.rows));
    write_u32(out, static_cast<std::uint32_t>(t.cols));
    for (double d : t.data) write_f64(out, d);
  }
  if (!out) fail("write failed");
}

void save_checkpoint(const CheckpointBlocks& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open for writing: " + path.string());
  save_checkpoint(ckpt, out);
}

CheckpointBlocks load_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    fail("bad magic (not a checkpoint file)");
  CheckpointBlocks ckpt;
  const std::uint32_t meta_len = read_u32(in);
  ckpt.metadata.resize(meta_len);
  if (meta_len > 0 && !in.read(ckpt.metadata.data(), meta_len)) fail("truncated metadata");
  const std::uint32_t n_blocks = read_u32(in);
  for (std::uint32_t i = 0; i < n_blocks; ++i) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    if (name_len > 0 && !in.read(name.data(), name_len)) fail("truncated block name");
    const int rows = static_cast<int>(read_u32(in));
    const int cols = static_cast<int>(read_u32(in));
    Tensor2 t(rows, cols);
    for (double& d : t.data) d = read_f64(in);
    ckpt.blocks.emplace(std::move(name), std::move(t));
  }
  return ckpt;
}

CheckpointBlocks load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open: " + path.string());
  return load_checkpoint(in);
}

void pack_network(const NetworkParams& net, const std::string& prefix, CheckpointBlocks& out) {
  for (const auto& [name, t] : net.param_refs()) out.blocks[prefix + name] = *t;
}

void unpack_network(const CheckpointBlocks& in, const std::string& prefix, NetworkParams& net) {
  for (auto& [name, t] : net.param_refs()) {
    const auto it = in.blocks.find(prefix + name);
    if (it == in.blocks.end()) fail("missing block: " + prefix + name);
    if (!t->same_shape(it->second))
      fail("shape mismatch for block: " + prefix + name);
    *t = it->second;
  }
}

} // namespace plumerl
