#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sme/numcore/matrix.hpp"

namespace sme {

// One region: precomputed image/text features, raw POI category counts and
// one label per task.
struct RegionRecord {
  std::uint32_t region_id = 0;
  Vector image_feat;
  Vector text_feat;
  Vector poi_counts;
  Vector labels;

  bool operator==(const RegionRecord&) const = default;
};

struct Manifest {
  std::string name = "dataset";
  std::size_t d_e = 0;
  std::size_t poi_categories = 0;
  std::size_t num_tasks = 0;
  std::vector<std::string> task_names;

  bool operator==(const Manifest&) const = default;
};

struct Dataset {
  Manifest manifest;
  std::vector<RegionRecord> records;

  std::size_t size() const noexcept { return records.size(); }

  // Largest region id + 1; the size of a region embedding table covering it.
  std::size_t region_capacity() const;

  // Dimensions, finiteness, nonnegative counts, unique region ids.
  // Throws DataError naming the offending record.
  void validate() const;

  std::optional<std::size_t> task_index(std::string_view name) const;

  bool operator==(const Dataset&) const = default;
};

std::vector<std::string> default_task_names(std::size_t num_tasks);

// Elementwise log1p of POI counts; negative counts are a DataError.
Vector poi_featurize(std::span<const double> counts);

enum class DatasetFormat { urf1, csv };

// Writes the dataset and a `<path>.manifest` sidecar.
void write_dataset(const Dataset& dataset, const std::filesystem::path& path, DatasetFormat format);

// Detects the format from the leading bytes (urf magic) or a .csv
// extension. Reads the sidecar manifest when present.
Dataset read_dataset(const std::filesystem::path& path);

// Format-specific halves, exposed for tests.
void write_urf1(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_urf1(const std::filesystem::path& path);
void write_csv(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_csv(const std::filesystem::path& path);
std::string csv_header(std::size_t d_e, std::size_t poi_categories, std::size_t num_tasks);

}  // namespace sme
