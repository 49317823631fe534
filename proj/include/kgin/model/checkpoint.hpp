#pragma once

#include <filesystem>
#include <string>

#include "kgin/model/network.hpp"

namespace kgin::model {

/// Checkpoint layout (little-endian):
///   "KGIN", u32 version,
///   config: u32 d, heads, layers, mlp_ratio, X, Y, T, patch; u8 plane bits;
///           f64 lambda, f64 eps,
///   u32 tensor count, then per tensor: u32 name length, name bytes, u32 rank,
///   u32 extents, f32 payload,
///   u64 FNV-1a of every preceding byte.
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void save_params(const KspaceNetwork<T>& net, const std::filesystem::path& path);

/// Loads into `net`; the stored config must equal `net.config()`.
template <typename T>
void load_params(KspaceNetwork<T>& net, const std::filesystem::path& path);

ModelConfig read_checkpoint_config(const std::filesystem::path& path);

/// Builds a network from the embedded config and loads its weights.
template <typename T>
KspaceNetwork<T> load_network(const std::filesystem::path& path);

/// Short content hash identifying a checkpoint file.
std::string checkpoint_id(const std::filesystem::path& path);

}  // namespace kgin::model
