#include "sme/cli/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "sme/error.hpp"

namespace sme {

using nlohmann::json;

namespace {

// Reads keys from one JSON object, recording absent ones and rejecting
// leftovers in finish().
class Section {
 public:
  Section(const json& doc, std::string name, std::vector<std::string>& defaulted)
      : name_(std::move(name)), defaulted_(defaulted) {
    if (doc.contains(name_)) {
      obj_ = &doc.at(name_);
      if (!obj_->is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
    }
  }

  template <typename T>
  bool get(const char* key, T& out) {
    seen_.insert(key);
    if (obj_ == nullptr || !obj_->contains(key)) {
      defaulted_.push_back(name_ + "." + key);
      return false;
    }
    try {
      out = obj_->at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key " + name_ + "." + key + " has the wrong type: " + obj_->at(key).dump());
    }
    return true;
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    if (obj_ == nullptr || !obj_->contains(key)) {
      defaulted_.push_back(name_ + "." + key);
      return nullptr;
    }
    return &obj_->at(key);
  }

  void finish() const {
    if (obj_ == nullptr) return;
    for (const auto& [key, _] : obj_->items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key " + name_ + "." + key);
    }
  }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::set<std::string, std::less<>> seen_;
  std::vector<std::string>& defaulted_;
};

template <typename F>
void parse_enum(Section& s, const char* key, F&& assign) {
  std::string text;
  if (s.get(key, text)) assign(text);
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "model" && key != "train" && key != "data") throw ConfigError("unknown config section '" + key + "'");
  }
  RunConfig rc;
  auto& d = rc.defaulted;

  Section m(doc, "model", d);
  ModelConfig& mc = rc.model;
  rc.d_e_set = m.get("d_e", mc.d_e);
  m.get("d_r", mc.d_r);
  m.get("d_p", mc.d_p);
  rc.poi_categories_set = m.get("poi_categories", mc.poi_categories);
  rc.task_names_set = m.get("task_names", mc.task_names);
  m.get("n_specific", mc.n_specific);
  m.get("n_dual", mc.n_dual);
  m.get("n_shared", mc.n_shared);
  m.get("expert_hidden", mc.expert_hidden);
  m.get("expert_out", mc.expert_out);
  m.get("head_hidden", mc.head_hidden);
  m.get("epsilon", mc.epsilon);
  parse_enum(m, "activation", [&](const std::string& s) { mc.activation = parse_activation(s); });
  parse_enum(m, "sigma", [&](const std::string& s) { mc.sigma = parse_sigma(s); });
  m.get("norm_eps", mc.norm_eps);
  parse_enum(m, "fallback", [&](const std::string& s) { mc.fallback = parse_fallback(s); });
  m.get("mode", rc.mode);
  m.finish();

  Section t(doc, "train", d);
  TrainConfig& tc = rc.train;
  t.get("learning_rate", tc.adam.learning_rate);
  t.get("beta1", tc.adam.beta1);
  t.get("beta2", tc.adam.beta2);
  t.get("adam_eps", tc.adam.eps);
  t.get("batch_size", tc.batch_size);
  t.get("max_epochs", tc.max_epochs);
  t.get("patience", tc.patience);
  t.get("seeds", tc.seeds);
  t.get("lambda", tc.lambda);
  t.get("max_steps", tc.max_steps);
  t.get("metrics_in_original_space", tc.metrics_in_original_space);
  t.finish();

  Section s(doc, "data", d);
  DataConfig& dc = rc.data;
  s.get("path", dc.path);
  if (const json* tr = s.raw("transform")) {
    dc.transform.clear();
    try {
      if (tr->is_string()) {
        dc.transform.push_back(parse_scale_request(tr->get<std::string>()));
      } else {
        for (const auto& e : tr->get<std::vector<std::string>>()) dc.transform.push_back(parse_scale_request(e));
      }
    } catch (const json::exception&) {
      throw ConfigError("config key data.transform must be a string or a list of strings");
    }
    if (dc.transform.empty()) throw ConfigError("config key data.transform is empty");
  }
  s.get("split_seed", dc.split_seed);
  std::vector<double> ratios;
  if (s.get("split_ratios", ratios)) {
    if (ratios.size() != 3) throw ConfigError("data.split_ratios needs three entries (train, val, test)");
    double sum = 0.0;
    for (double r : ratios) {
      if (!(r >= 0.0)) throw ConfigError("data.split_ratios entries must be >= 0");
      sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("data.split_ratios must sum to 1");
    dc.split_ratios = {ratios[0], ratios[1], ratios[2]};
  }
  s.finish();

  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(doc);
}

RunConfig default_run_config() { return parse_run_config(json::object()); }

void RunConfig::resolve(const Manifest& manifest) {
  std::string diff;
  auto check = [&](const char* key, std::size_t expected, std::size_t actual) {
    if (expected != actual) {
      diff += std::string(" ") + key + ": config " + std::to_string(expected) + ", data " + std::to_string(actual) + ";";
    }
  };
  if (d_e_set) check("d_e", model.d_e, manifest.d_e);
  if (poi_categories_set) check("poi_categories", model.poi_categories, manifest.poi_categories);
  if (task_names_set) {
    check("num_tasks", model.task_names.size(), manifest.num_tasks);
    if (model.task_names.size() == manifest.num_tasks && model.task_names != manifest.task_names) {
      diff += " task_names differ;";
    }
  }
  if (!diff.empty()) throw ConfigError("dimension mismatch between config and data:" + diff);
  model.d_e = manifest.d_e;
  model.poi_categories = manifest.poi_categories;
  model.task_names = manifest.task_names;
  model.mode = parse_task_mode(mode, model.task_names);
  model.validate();
  train.validate(model.num_tasks());
  scale_requests(model.num_tasks());
}

std::vector<ScaleRequest> RunConfig::scale_requests(std::size_t num_tasks) const {
  if (data.transform.size() == 1) return std::vector<ScaleRequest>(num_tasks, data.transform.front());
  if (data.transform.size() != num_tasks) {
    throw ConfigError("data.transform lists " + std::to_string(data.transform.size()) + " entries for " +
                      std::to_string(num_tasks) + " tasks");
  }
  return data.transform;
}

json model_config_to_json(const ModelConfig& c) {
  return json{{"d_e", c.d_e},
              {"d_r", c.d_r},
              {"d_p", c.d_p},
              {"poi_categories", c.poi_categories},
              {"task_names", c.task_names},
              {"n_specific", c.n_specific},
              {"n_dual", c.n_dual},
              {"n_shared", c.n_shared},
              {"expert_hidden", c.expert_hidden},
              {"expert_out", c.expert_out},
              {"head_hidden", c.head_hidden},
              {"epsilon", c.epsilon},
              {"activation", std::string(to_string(c.activation))},
              {"sigma", std::string(to_string(c.sigma))},
              {"norm_eps", c.norm_eps},
              {"fallback", std::string(to_string(c.fallback))},
              {"mode", to_string(c.mode, c.task_names)}};
}

ModelConfig model_config_from_json(const json& j) {
  RunConfig rc = parse_run_config(json{{"model", j}});
  if (!rc.d_e_set || !rc.poi_categories_set || !rc.task_names_set) {
    throw FormatError("stored model config lacks d_e, poi_categories or task_names");
  }
  rc.model.mode = parse_task_mode(rc.mode, rc.model.task_names);
  rc.model.validate();
  return rc.model;
}

json to_json(const RunConfig& c) {
  json model = model_config_to_json(c.model);
  model["mode"] = c.mode;
  json transform = json::array();
  for (ScaleRequest r : c.data.transform) transform.push_back(std::string(to_string(r)));
  const auto& t = c.train;
  return json{{"model", model},
              {"train",
               {{"learning_rate", t.adam.learning_rate},
                {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},
                {"adam_eps", t.adam.eps},
                {"batch_size", t.batch_size},
                {"max_epochs", t.max_epochs},
                {"patience", t.patience},
                {"seeds", t.seeds},
                {"lambda", t.lambda},
                {"max_steps", t.max_steps},
                {"metrics_in_original_space", t.metrics_in_original_space}}},
              {"data",
               {{"path", c.data.path},
                {"transform", transform},
                {"split_seed", c.data.split_seed},
                {"split_ratios", {c.data.split_ratios.train, c.data.split_ratios.val, c.data.split_ratios.test}}}}};
}

}  // namespace sme
