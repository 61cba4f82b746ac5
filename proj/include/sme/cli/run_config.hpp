#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sme/data/split.hpp"
#include "sme/data/transform.hpp"
#include "sme/model/config.hpp"
#include "sme/train/train.hpp"

namespace sme {

struct DataConfig {
  std::string path;
  // One entry applies to every task; otherwise one per task.
  std::vector<ScaleRequest> transform{ScaleRequest::automatic};
  std::uint64_t split_seed = 0;
  SplitRatios split_ratios;
};

// JSON document with sections "model", "train" and "data". Unknown keys are
// rejected; absent keys take the defaults of ModelConfig, TrainConfig and
// DataConfig. d_e, poi_categories and task_names default to the dataset's.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  std::string mode = "mt";

  bool d_e_set = false;
  bool poi_categories_set = false;
  bool task_names_set = false;

  // Dotted names of keys that fell back to their defaults, in document order.
  std::vector<std::string> defaulted;

  // Fills dataset-derived fields and resolves the mode. Throws ConfigError
  // listing expected and actual dims when explicit values disagree.
  void resolve(const Manifest& manifest);

  std::vector<ScaleRequest> scale_requests(std::size_t num_tasks) const;
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);
// An empty document: every key defaulted.
RunConfig default_run_config();

nlohmann::json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

}  // namespace sme
