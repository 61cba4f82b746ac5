#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sme/data/dataset.hpp"
#include "sme/error.hpp"

namespace sme {
namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string csv_header(std::size_t d_e, std::size_t poi_categories, std::size_t num_tasks) {
  std::string h = "region_id";
  for (std::size_t i = 0; i < d_e; ++i) h += ",img_" + std::to_string(i);
  for (std::size_t i = 0; i < d_e; ++i) h += ",txt_" + std::to_string(i);
  for (std::size_t i = 0; i < poi_categories; ++i) h += ",poi_" + std::to_string(i);
  for (std::size_t i = 0; i < num_tasks; ++i) h += ",y_" + std::to_string(i);
  return h;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write dataset '" + path.string() + "'");
  const auto& m = dataset.manifest;
  out << csv_header(m.d_e, m.poi_categories, m.num_tasks) << "\n";
  out.precision(17);
  for (const auto& r : dataset.records) {
    out << r.region_id;
    for (const Vector* v : {&r.image_feat, &r.text_feat, &r.poi_counts, &r.labels}) {
      for (double x : *v) out << ',' << x;
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing dataset '" + path.string() + "'");
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  const std::string where = "'" + path.string() + "'";
  std::string line;
  if (!std::getline(in, line)) throw FormatError(where + ": empty csv");
  const auto cols = split_commas(line);
  Dataset ds;
  auto& m = ds.manifest;
  for (const auto& c : cols) {
    if (c.rfind("img_", 0) == 0) ++m.d_e;
    else if (c.rfind("poi_", 0) == 0) ++m.poi_categories;
    else if (c.rfind("y_", 0) == 0) ++m.num_tasks;
  }
  if (line != csv_header(m.d_e, m.poi_categories, m.num_tasks)) {
    throw FormatError(where + ": unexpected csv header");
  }
  m.task_names = default_task_names(m.num_tasks);

  std::size_t k = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != cols.size()) {
      throw FormatError(where + ": record " + std::to_string(k) + " has " +
                        std::to_string(fields.size()) + " fields, header has " +
                        std::to_string(cols.size()));
    }
    RegionRecord r;
    {
      const auto& f = fields[0];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), r.region_id);
      if (ec != std::errc{} || ptr != f.data() + f.size()) {
        throw FormatError(where + ": bad region id in record " + std::to_string(k));
      }
    }
    std::size_t col = 1;
    auto take = [&](Vector& v, std::size_t n) {
      v.resize(n);
      for (std::size_t i = 0; i < n; ++i, ++col) {
        const auto& f = fields[col];
        double x = 0.0;
        auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), x);
        if (ptr != f.data() + f.size() || (ec != std::errc{} && ec != std::errc::result_out_of_range)) {
          throw FormatError(where + ": bad number '" + f + "' in record " + std::to_string(k));
        }
        if (!std::isfinite(x)) throw DataError(where + ": non-finite value in record " + std::to_string(k));
        v[i] = x;
      }
    };
    take(r.image_feat, m.d_e);
    take(r.text_feat, m.d_e);
    take(r.poi_counts, m.poi_categories);
    take(r.labels, m.num_tasks);
    ds.records.push_back(std::move(r));
    ++k;
  }
  return ds;
}

}  // namespace sme
