#include "sme/model/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sme/error.hpp"

namespace sme {

SigmaKind parse_sigma(std::string_view s) {
  if (s == "layer_norm") return SigmaKind::layer_norm;
  if (s == "identity") return SigmaKind::identity;
  throw ConfigError("unknown sigma '" + std::string(s) + "' (expected layer_norm|identity)");
}

std::string_view to_string(SigmaKind s) {
  return s == SigmaKind::layer_norm ? "layer_norm" : "identity";
}

GateFallback parse_fallback(std::string_view s) {
  if (s == "literal") return GateFallback::literal;
  if (s == "top1") return GateFallback::top1;
  throw ConfigError("unknown fallback '" + std::string(s) + "' (expected literal|top1)");
}

std::string_view to_string(GateFallback f) { return f == GateFallback::top1 ? "top1" : "literal"; }

TaskMode parse_task_mode(std::string_view s, const std::vector<std::string>& task_names) {
  if (s == "mt") return {};
  if (s.rfind("st:", 0) == 0) {
    const std::string name(s.substr(3));
    auto it = std::find(task_names.begin(), task_names.end(), name);
    if (it == task_names.end()) throw ConfigError("single-task mode names unknown task '" + name + "'");
    return {true, static_cast<std::size_t>(it - task_names.begin())};
  }
  throw ConfigError("bad mode '" + std::string(s) + "' (expected mt or st:<task>)");
}

std::string to_string(const TaskMode& mode, const std::vector<std::string>& task_names) {
  if (!mode.single_task) return "mt";
  return "st:" + task_names.at(mode.task);
}

std::vector<std::size_t> ModelConfig::active_tasks() const {
  if (mode.single_task) return {mode.task};
  std::vector<std::size_t> out(num_tasks());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = t;
  return out;
}

std::size_t ModelConfig::experts_per_branch() const {
  const std::size_t t = active_tasks().size();
  return t * n_specific + (t * (t - 1) / 2) * n_dual + n_shared;
}

std::size_t ModelConfig::eligible_per_task() const {
  const std::size_t t = active_tasks().size();
  return n_specific + (t - 1) * n_dual + n_shared;
}

void ModelConfig::validate() const {
  if (task_names.empty()) throw ConfigError("model needs at least one task");
  std::set<std::string> unique(task_names.begin(), task_names.end());
  if (unique.size() != task_names.size()) throw ConfigError("task names must be distinct");
  if (mode.single_task && mode.task >= task_names.size()) {
    throw ConfigError("single-task mode refers to task " + std::to_string(mode.task) +
                      " but only " + std::to_string(task_names.size()) + " exist");
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in [0, 1)");
  if (d_in() == 0) throw ConfigError("input dimension d_e + d_r + d_p is zero");
  if (d_p > 0 && poi_categories == 0) throw ConfigError("POI embedding needs poi_categories >= 1");
  if (expert_hidden == 0 || expert_out == 0) throw ConfigError("expert_hidden and expert_out must be >= 1");
  if (sigma == SigmaKind::layer_norm && expert_out < 2) {
    throw ConfigError("layer_norm output needs expert_out >= 2");
  }
  if (!(norm_eps >= 0.0) || !std::isfinite(norm_eps)) throw ConfigError("norm_eps must be >= 0");
  if (eligible_per_task() == 0) {
    throw ConfigError("no experts are eligible for some task (n_specific, n_dual and n_shared all zero)");
  }
}

}  // namespace sme
