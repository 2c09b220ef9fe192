#pragma once

#include "plumerl/nn.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace plumerl {

/// Versioned binary container: a magic tag, a free-form metadata string,
/// then named parameter blocks of raw little-endian 64-bit floats. Reload
/// reproduces every value bit-exactly.
struct CheckpointBlocks {
  std::string metadata; // JSON by convention; opaque to this layer
  std::map<std::string, Tensor2> blocks;
};

void save_checkpoint(const CheckpointBlocks& ckpt, std::ostream& out);
void save_checkpoint(const CheckpointBlocks& ckpt, const std::filesystem::path& path);
CheckpointBlocks load_checkpoint(std::istream& in);
CheckpointBlocks load_checkpoint(const std::filesystem::path& path);

/// Inserts every parameter of `net` under `prefix` ("online.", "adam.m.", ...).
void pack_network(const NetworkParams& net, const std::string& prefix, CheckpointBlocks& out);
/// Restores parameters packed by pack_network; shapes must match `net`.
void unpack_network(const CheckpointBlocks& in, const std::string& prefix, NetworkParams& net);

} // namespace plumerl
