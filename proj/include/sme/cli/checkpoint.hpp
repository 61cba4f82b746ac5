#pragma once

#include <filesystem>

#include <json.hpp>

#include "sme/data/split.hpp"
#include "sme/data/transform.hpp"
#include "sme/model/model.hpp"

namespace sme {

// Layout: "SMCK", u32 version, u64 header length, UTF-8 JSON header (dataset
// manifest, model config, n_regions, transform, split, slice table, run
// config), u64 value count, then the tape values as little-endian float64.
struct Checkpoint {
  Model model;
  Manifest manifest;
  TargetTransform transform;
  SplitAssignment split;
  nlohmann::json run_config;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json transform_to_json(const TargetTransform& t);
TargetTransform transform_from_json(const nlohmann::json& j);

}  // namespace sme
