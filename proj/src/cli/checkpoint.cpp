#include "sme/cli/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sme/cli/run_config.hpp"
#include "sme/error.hpp"

namespace sme {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'S', 'M', 'C', 'K'};

template <typename U>
void put_le(std::string& buf, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(const std::string& buf, std::size_t& pos, const char* what) {
  if (buf.size() - pos < sizeof(U)) throw FormatError(std::string("checkpoint truncated in ") + what);
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  }
  pos += sizeof(U);
  return v;
}

json split_to_json(const SplitAssignment& s) {
  return json{{"seed", s.seed}, {"train", s.train}, {"val", s.val}, {"test", s.test}};
}

json manifest_to_json(const Manifest& m) {
  return json{{"name", m.name}, {"d_e", m.d_e}, {"poi_categories", m.poi_categories},
              {"num_tasks", m.num_tasks}, {"task_names", m.task_names}};
}

}  // namespace

json transform_to_json(const TargetTransform& t) {
  json out = json::array();
  for (const auto& tt : t.tasks) {
    out.push_back({{"scale", std::string(to_string(tt.scale))},
                   {"mean", tt.mean},
                   {"std", tt.std},
                   {"std_clamped", tt.std_clamped}});
  }
  return out;
}

TargetTransform transform_from_json(const json& j) {
  TargetTransform t;
  for (const auto& e : j) {
    TaskTransform tt;
    tt.scale = parse_target_scale(e.at("scale").get<std::string>());
    tt.mean = e.at("mean").get<double>();
    tt.std = e.at("std").get<double>();
    tt.std_clamped = e.at("std_clamped").get<bool>();
    t.tasks.push_back(tt);
  }
  return t;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const ParamTape& tape = ckpt.model.tape;
  json slices = json::array();
  for (const auto& s : tape.slices()) slices.push_back({s.name, s.rows, s.cols});
  const json header{{"manifest", manifest_to_json(ckpt.manifest)},
                    {"model", model_config_to_json(ckpt.model.config)},
                    {"n_regions", ckpt.model.n_regions},
                    {"transform", transform_to_json(ckpt.transform)},
                    {"split", split_to_json(ckpt.split)},
                    {"slices", slices},
                    {"run_config", ckpt.run_config}};
  const std::string text = header.dump();

  std::string buf(kMagic, 4);
  put_le<std::uint32_t>(buf, kCheckpointVersion);
  put_le<std::uint64_t>(buf, text.size());
  buf += text;
  const auto values = tape.all_values();
  put_le<std::uint64_t>(buf, values.size());
  for (double v : values) put_le<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(v));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw FormatError("'" + path.string() + "' is not a checkpoint (bad magic)");
  }
  std::size_t pos = 4;
  const auto version = get_le<std::uint32_t>(buf, pos, "version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint64_t>(buf, pos, "header length");
  if (buf.size() - pos < header_len) throw FormatError("checkpoint truncated in header");
  const std::string text = buf.substr(pos, header_len);
  pos += header_len;

  Checkpoint ck;
  try {
    const json header = json::parse(text);
    const auto& m = header.at("manifest");
    ck.manifest.name = m.at("name").get<std::string>();
    ck.manifest.d_e = m.at("d_e").get<std::size_t>();
    ck.manifest.poi_categories = m.at("poi_categories").get<std::size_t>();
    ck.manifest.num_tasks = m.at("num_tasks").get<std::size_t>();
    ck.manifest.task_names = m.at("task_names").get<std::vector<std::string>>();
    const ModelConfig cfg = model_config_from_json(header.at("model"));
    const auto n_regions = header.at("n_regions").get<std::size_t>();
    Rng unused(0);
    ck.model = build_model(cfg, n_regions, unused);
    ck.transform = transform_from_json(header.at("transform"));
    const auto& s = header.at("split");
    ck.split.seed = s.at("seed").get<std::uint64_t>();
    ck.split.train = s.at("train").get<std::vector<std::size_t>>();
    ck.split.val = s.at("val").get<std::vector<std::size_t>>();
    ck.split.test = s.at("test").get<std::vector<std::size_t>>();
    ck.run_config = header.at("run_config");

    const auto& slices = header.at("slices");
    const auto& actual = ck.model.tape.slices();
    if (slices.size() != actual.size()) throw FormatError("checkpoint slice table does not match its model config");
    for (std::size_t i = 0; i < actual.size(); ++i) {
      if (slices[i].at(0).get<std::string>() != actual[i].name || slices[i].at(1).get<std::size_t>() != actual[i].rows ||
          slices[i].at(2).get<std::size_t>() != actual[i].cols) {
        throw FormatError("checkpoint slice '" + actual[i].name + "' does not match its model config");
      }
    }
  } catch (const json::exception& e) {
    throw FormatError("checkpoint header: " + std::string(e.what()));
  } catch (const ConfigError& e) {
    throw FormatError("checkpoint header: " + std::string(e.what()));
  }

  auto values = ck.model.tape.all_values();
  const auto count = get_le<std::uint64_t>(buf, pos, "value count");
  if (count != values.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " values, model needs " +
                      std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<double>(get_le<std::uint64_t>(buf, pos, "values"));
  }
  if (pos != buf.size()) throw FormatError("checkpoint has trailing bytes");
  return ck;
}

}  // namespace sme
