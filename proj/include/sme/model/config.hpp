#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sme/numcore/ops.hpp"

namespace sme {

// Output normalisation applied to each expert's output.
enum class SigmaKind { layer_norm, identity };

// What to do when every gate of a task falls at or below epsilon.
enum class GateFallback { literal, top1 };

SigmaKind parse_sigma(std::string_view s);
std::string_view to_string(SigmaKind s);
GateFallback parse_fallback(std::string_view s);
std::string_view to_string(GateFallback f);

struct TaskMode {
  bool single_task = false;
  std::size_t task = 0;  // index into ModelConfig::task_names when single_task

  bool operator==(const TaskMode&) const = default;
};

// Parses "mt" or "st:<task name>".
TaskMode parse_task_mode(std::string_view s, const std::vector<std::string>& task_names);
std::string to_string(const TaskMode& mode, const std::vector<std::string>& task_names);

struct ModelConfig {
  std::size_t d_e = 16;
  std::size_t d_r = 6;
  std::size_t d_p = 15;
  std::size_t poi_categories = 15;
  std::vector<std::string> task_names{"carbon", "population", "light"};

  // Experts per task, per task pair, and shared, in each branch.
  std::size_t n_specific = 8;
  std::size_t n_dual = 2;
  std::size_t n_shared = 4;

  std::size_t expert_hidden = 64;
  std::size_t expert_out = 32;
  // 0 makes every head a single linear layer.
  std::size_t head_hidden = 64;

  double epsilon = 0.01;
  Activation activation = Activation::relu;
  SigmaKind sigma = SigmaKind::layer_norm;
  double norm_eps = 1e-5;
  GateFallback fallback = GateFallback::top1;
  TaskMode mode;

  std::size_t d_in() const noexcept { return d_e + d_r + d_p; }
  std::size_t num_tasks() const noexcept { return task_names.size(); }

  // Tasks the model predicts, as indices into task_names.
  std::vector<std::size_t> active_tasks() const;

  std::size_t experts_per_branch() const;
  std::size_t eligible_per_task() const;

  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace sme
