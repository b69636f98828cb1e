#pragma once

#include <cstdint>
#include <filesystem>

#include "paretoab/model.hpp"

namespace paretoab {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  /// Number of training epochs already applied; resumed training continues from here.
  std::uint32_t epochs_completed = 0;
};

// Layout: "PPB1", u32 version, i64 catalog_size, i32 embed_dim, i32 hidden_dim,
// i32 pref_dim, i32 max_prefix_len, f64 position_decay, u64 seed,
// u32 epochs_completed, u32 tensor count, then per tensor: u32 name length,
// name, u64 element count, f64 elements in row-major order. Little-endian.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws std::invalid_argument when the model was trained for another catalog.
void require_catalog(const Model& model, std::int64_t catalog_size);

}  // namespace paretoab
