#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "gvrnn/nn/parameters.hpp"

namespace gvrnn::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary container, little endian:
///   "GVRNNCKP" u32 version
///   u64 meta_len, meta_len bytes of JSON (config echo, rng state, step)
///   u64 param_count, then per parameter in name order:
///     u32 name_len, name, u64 rows, u64 cols, i64 adam_steps,
///     value, first moment, second moment (rows*cols f64 each, column major)
struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  ParameterSet params;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gvrnn::nn
