#include "sme/data/manifest.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "sme/error.hpp"

namespace sme {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

std::size_t parse_count(const std::map<std::string, std::string>& kv, const std::string& key,
                        const std::filesystem::path& path) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("manifest '" + path.string() + "' lacks key '" + key + "'");
  std::size_t v = 0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw FormatError("manifest '" + path.string() + "': bad value for '" + key + "'");
  }
  return v;
}

std::string fmt17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::filesystem::path manifest_path_for(const std::filesystem::path& dataset_path) {
  return dataset_path.string() + ".manifest";
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest,
                    std::size_t records, const TargetTransform* transform) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  out << "name=" << manifest.name << "\n";
  out << "records=" << records << "\n";
  out << "d_e=" << manifest.d_e << "\n";
  out << "poi_categories=" << manifest.poi_categories << "\n";
  out << "num_tasks=" << manifest.num_tasks << "\n";
  out << "tasks=";
  for (std::size_t t = 0; t < manifest.task_names.size(); ++t) {
    out << (t ? "," : "") << manifest.task_names[t];
  }
  out << "\n";
  if (transform) {
    for (std::size_t t = 0; t < transform->tasks.size(); ++t) {
      const auto& tt = transform->tasks[t];
      out << "transform." << manifest.task_names.at(t) << "=" << to_string(tt.scale) << ","
          << fmt17(tt.mean) << "," << fmt17(tt.std) << "\n";
    }
  }
  if (!out) throw IoError("failed writing manifest '" + path.string() + "'");
}

ManifestFile read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("manifest '" + path.string() + "': bad line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }

  ManifestFile mf;
  mf.manifest.name = kv.count("name") ? kv["name"] : path.stem().string();
  mf.records = parse_count(kv, "records", path);
  mf.manifest.d_e = parse_count(kv, "d_e", path);
  mf.manifest.poi_categories = parse_count(kv, "poi_categories", path);
  mf.manifest.num_tasks = parse_count(kv, "num_tasks", path);
  mf.manifest.task_names = kv.count("tasks") ? split(kv["tasks"], ',') : default_task_names(mf.manifest.num_tasks);
  if (mf.manifest.task_names.size() != mf.manifest.num_tasks) {
    throw FormatError("manifest '" + path.string() + "': task list does not match num_tasks");
  }

  TargetTransform tr;
  for (const auto& name : mf.manifest.task_names) {
    auto it = kv.find("transform." + name);
    if (it == kv.end()) break;
    const auto parts = split(it->second, ',');
    if (parts.size() != 3) throw FormatError("manifest: bad transform entry for '" + name + "'");
    TaskTransform tt;
    tt.scale = parse_target_scale(parts[0]);
    tt.mean = std::stod(parts[1]);
    tt.std = std::stod(parts[2]);
    tr.tasks.push_back(tt);
  }
  if (tr.tasks.size() == mf.manifest.num_tasks && !tr.tasks.empty()) mf.transform = tr;
  return mf;
}

}  // namespace sme
