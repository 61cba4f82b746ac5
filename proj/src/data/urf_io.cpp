// urf1: little-endian binary dataset.
//
//   offset 0   magic "URF1"
//          4   u32 version (= 1)
//          8   u32 K, u32 d_e, u32 C, u32 T
//         24   K records of: u32 region_id, (2*d_e + C + T) x f32
//              in order image, text, poi counts, labels.

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <vector>

#include "sme/data/dataset.hpp"
#include "sme/error.hpp"

namespace sme {
namespace {

constexpr std::size_t kHeaderBytes = 24;

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f32(std::vector<unsigned char>& buf, double v) {
  put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw ArgumentError(std::string("urf1: ") + what + " exceeds u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_urf1(const Dataset& dataset, const std::filesystem::path& path) {
  const auto& m = dataset.manifest;
  const std::size_t per_record = 2 * m.d_e + m.poi_categories + m.num_tasks;
  std::vector<unsigned char> buf;
  buf.reserve(kHeaderBytes + dataset.size() * (4 + 4 * per_record));
  for (char c : {'U', 'R', 'F', '1'}) buf.push_back(static_cast<unsigned char>(c));
  put_u32(buf, 1);
  put_u32(buf, checked_u32(dataset.size(), "record count"));
  put_u32(buf, checked_u32(m.d_e, "d_e"));
  put_u32(buf, checked_u32(m.poi_categories, "C"));
  put_u32(buf, checked_u32(m.num_tasks, "T"));
  for (const auto& r : dataset.records) {
    put_u32(buf, r.region_id);
    for (const Vector* v : {&r.image_feat, &r.text_feat, &r.poi_counts, &r.labels}) {
      for (double x : *v) put_f32(buf, x);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write dataset '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing dataset '" + path.string() + "'");
}

Dataset read_urf1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
  const std::string where = "'" + path.string() + "'";
  if (buf.size() < 4) throw FormatError(where + ": truncated before magic");
  if (buf[0] != 'U' || buf[1] != 'R' || buf[2] != 'F') throw FormatError(where + ": bad magic");
  if (buf[3] != '1') {
    throw FormatError(where + ": unsupported urf version '" + std::string(1, static_cast<char>(buf[3])) + "'");
  }
  if (buf.size() < kHeaderBytes) throw FormatError(where + ": truncated header");
  const std::uint32_t version = get_u32(&buf[4]);
  if (version != 1) throw FormatError(where + ": unsupported urf1 version " + std::to_string(version));

  Dataset ds;
  const std::size_t k_count = get_u32(&buf[8]);
  auto& m = ds.manifest;
  m.d_e = get_u32(&buf[12]);
  m.poi_categories = get_u32(&buf[16]);
  m.num_tasks = get_u32(&buf[20]);
  m.task_names = default_task_names(m.num_tasks);

  const std::size_t per_record = 2 * m.d_e + m.poi_categories + m.num_tasks;
  const std::size_t record_bytes = 4 + 4 * per_record;
  ds.records.reserve(k_count);
  std::size_t pos = kHeaderBytes;
  for (std::size_t k = 0; k < k_count; ++k) {
    if (buf.size() - pos < record_bytes) {
      throw FormatError(where + ": truncated in record " + std::to_string(k) + " of " +
                        std::to_string(k_count));
    }
    RegionRecord r;
    r.region_id = get_u32(&buf[pos]);
    pos += 4;
    auto take = [&](Vector& v, std::size_t n, const char* field) {
      v.resize(n);
      for (std::size_t i = 0; i < n; ++i, pos += 4) {
        const float f = std::bit_cast<float>(get_u32(&buf[pos]));
        if (!std::isfinite(f)) {
          throw DataError(where + ": non-finite " + field + " value in record " + std::to_string(k));
        }
        v[i] = f;
      }
    };
    take(r.image_feat, m.d_e, "image");
    take(r.text_feat, m.d_e, "text");
    take(r.poi_counts, m.poi_categories, "poi");
    take(r.labels, m.num_tasks, "label");
    ds.records.push_back(std::move(r));
  }
  if (pos != buf.size()) {
    throw FormatError(where + ": " + std::to_string(buf.size() - pos) +
                      " trailing bytes after record " + std::to_string(k_count) +
                      " (header dimensions do not match payload)");
  }
  return ds;
}

}  // namespace sme
