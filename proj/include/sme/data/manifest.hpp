#pragma once

#include <filesystem>
#include <optional>

#include "sme/data/dataset.hpp"
#include "sme/data/transform.hpp"

namespace sme {

// Key-value sidecar, one `key=value` per line:
//   name, records, d_e, poi_categories, num_tasks, tasks (comma separated),
//   and optionally transform.<task>=<scale>,<mean>,<std>.
struct ManifestFile {
  Manifest manifest;
  std::size_t records = 0;
  std::optional<TargetTransform> transform;
};

std::filesystem::path manifest_path_for(const std::filesystem::path& dataset_path);

void write_manifest(const std::filesystem::path& path, const Manifest& manifest,
                    std::size_t records, const TargetTransform* transform);

ManifestFile read_manifest(const std::filesystem::path& path);

}  // namespace sme
