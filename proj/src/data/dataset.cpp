#include "sme/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "sme/data/manifest.hpp"
#include "sme/error.hpp"

namespace sme {

std::size_t Dataset::region_capacity() const {
  std::size_t cap = 0;
  for (const auto& r : records) cap = std::max<std::size_t>(cap, std::size_t{r.region_id} + 1);
  return cap;
}

void Dataset::validate() const {
  const auto& m = manifest;
  if (m.task_names.size() != m.num_tasks) {
    throw DataError("manifest lists " + std::to_string(m.task_names.size()) +
                    " task names for " + std::to_string(m.num_tasks) + " tasks");
  }
  std::unordered_set<std::uint32_t> seen;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    const std::string where = "record " + std::to_string(k) + " (region " +
                              std::to_string(r.region_id) + ")";
    if (r.image_feat.size() != m.d_e || r.text_feat.size() != m.d_e ||
        r.poi_counts.size() != m.poi_categories || r.labels.size() != m.num_tasks) {
      throw DataError(where + ": dimensions do not match the manifest");
    }
    for (const Vector* v : {&r.image_feat, &r.text_feat, &r.poi_counts, &r.labels}) {
      if (!all_finite(*v)) throw DataError(where + ": non-finite value");
    }
    for (double c : r.poi_counts) {
      if (c < 0.0) throw DataError(where + ": negative POI count");
    }
    if (!seen.insert(r.region_id).second) throw DataError(where + ": duplicate region id");
  }
}

std::optional<std::size_t> Dataset::task_index(std::string_view name) const {
  const auto& names = manifest.task_names;
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

std::vector<std::string> default_task_names(std::size_t num_tasks) {
  static const char* kNames[] = {"carbon", "population", "light"};
  std::vector<std::string> names;
  for (std::size_t t = 0; t < num_tasks; ++t) {
    names.push_back(t < 3 ? kNames[t] : "task_" + std::to_string(t));
  }
  return names;
}

Vector poi_featurize(std::span<const double> counts) {
  Vector out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0.0) throw DataError("negative POI count at category " + std::to_string(i));
    out[i] = std::log1p(counts[i]);
  }
  return out;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path,
                   DatasetFormat format) {
  dataset.validate();
  if (format == DatasetFormat::urf1) {
    write_urf1(dataset, path);
  } else {
    write_csv(dataset, path);
  }
  write_manifest(manifest_path_for(path), dataset.manifest, dataset.size(), nullptr);
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open dataset '" + path.string() + "'");
  char magic[3] = {0, 0, 0};
  probe.read(magic, 3);
  const bool is_urf = probe.gcount() == 3 && magic[0] == 'U' && magic[1] == 'R' && magic[2] == 'F';
  probe.close();

  Dataset ds;
  if (is_urf) {
    ds = read_urf1(path);
  } else if (path.extension() == ".csv") {
    ds = read_csv(path);
  } else {
    throw FormatError("'" + path.string() + "': bad magic (not a urf dataset) and not a .csv file");
  }

  const auto sidecar = manifest_path_for(path);
  if (std::filesystem::exists(sidecar)) {
    const ManifestFile mf = read_manifest(sidecar);
    const auto& m = mf.manifest;
    if (m.d_e != ds.manifest.d_e || m.poi_categories != ds.manifest.poi_categories ||
        m.num_tasks != ds.manifest.num_tasks) {
      throw FormatError("manifest '" + sidecar.string() + "' disagrees with dataset dimensions");
    }
    ds.manifest.name = m.name;
    ds.manifest.task_names = m.task_names;
  } else {
    ds.manifest.name = path.stem().string();
  }
  ds.validate();
  return ds;
}

}  // namespace sme
