#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sme/train/train.hpp"

namespace sme {

// Data shared by every run of a harness: one split and one fitted transform,
// so MT, ST, ablation and sweep runs see identical rows.
struct HarnessContext {
  const Dataset* dataset = nullptr;
  SplitAssignment split;
  TargetTransform transform;
  // Called from worker threads with one line per finished run; may be empty.
  std::function<void(const std::string&)> progress;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

struct TaskSummary {
  std::string task;
  MeanStd r2, rmse, mae;
};

// Across-seed summary. An undefined R2 in any run makes that mean NaN.
struct MetricsSummary {
  std::vector<TaskSummary> tasks;
  MeanStd avg_r2, avg_rmse, avg_mae;

  static MetricsSummary of(const std::vector<TaskMetrics>& runs);
  const TaskSummary& task(std::string_view name) const;
};

struct SeedRun {
  std::uint64_t seed = 0;
  RunHistory history;
  TaskMetrics val;                  // best snapshot on the validation split
  std::optional<TaskMetrics> test;  // absent when the test split is empty
  // Mean retained experts per active task on the validation rows.
  std::vector<double> active_counts;
};

struct MultiSeedResult {
  std::vector<SeedRun> runs;  // in seed-list order
  MetricsSummary val;
  std::optional<MetricsSummary> test;
  std::vector<double> active_counts;  // averaged over seeds
};

// Number of worker threads for independent runs: SPARSE_SME_THREADS, default 1.
std::size_t harness_threads();

// Trains one model per seed in config.seeds; the model is initialised from
// Rng(seed) and shuffled with shuffle_seed_for(seed).
MultiSeedResult run_multi_seed(const HarnessContext& ctx, const ModelConfig& model_config,
                               const TrainConfig& train_config);

// The single-task counterpart of an MT config: one group of M_tau specific
// experts for the task, no dual or shared experts, one router and one head.
ModelConfig single_task_config(const ModelConfig& mt_config, std::size_t task);

MultiSeedResult run_single_task(const HarnessContext& ctx, const ModelConfig& mt_config,
                                std::size_t task, const TrainConfig& train_config);

struct AblationRow {
  std::string name;
  std::size_t n_specific = 0;  // per task
  std::size_t n_shared = 0;
  std::size_t n_dual = 0;  // per task pair
};

struct AblationSpec {
  std::string name;
  std::size_t budget = 16;  // required experts eligible per task
  std::vector<AblationRow> rows;
};

// The seven built-in expert allocations of sixteen experts, written as
// (N_sp, N_sh, N_dt) for three tasks.
AblationSpec paper_appendix_b();

// Built-in spec by name, or a JSON file path with {"name", "budget", "rows":
// [{"name", "n_specific", "n_shared", "n_dual"}]}.
AblationSpec load_ablation_spec(const std::string& name_or_path);

// Throws ConfigError naming the first row whose eligible count differs from
// the budget for num_tasks tasks.
void check_budget(const AblationSpec& spec, std::size_t num_tasks);

struct AblationResult {
  AblationRow row;
  std::size_t eligible_per_task = 0;
  std::size_t experts_per_branch = 0;
  MultiSeedResult result;
};

std::vector<AblationResult> run_ablation(const HarnessContext& ctx, const ModelConfig& base,
                                         const AblationSpec& spec, const TrainConfig& train_config);

enum class SweepAxis { epsilon, d_r };
SweepAxis parse_sweep_axis(std::string_view s);
std::string_view to_string(SweepAxis a);

struct SweepSpec {
  std::string name;
  SweepAxis axis = SweepAxis::epsilon;
  std::vector<double> values;
};

SweepSpec paper_appendix_c_epsilon();
SweepSpec paper_appendix_c_d_r();

// Built-in sweep by name, or a JSON file path with {"name", "axis", "values"}.
SweepSpec load_sweep_spec(const std::string& name_or_path);

// Model config with the axis set to value; ConfigError if value is invalid.
ModelConfig apply_sweep_value(const ModelConfig& base, SweepAxis axis, double value);

struct SweepResult {
  double value = 0.0;
  MultiSeedResult result;
};

std::vector<SweepResult> run_sweep(const HarnessContext& ctx, const ModelConfig& base,
                                   const SweepSpec& spec, const TrainConfig& train_config);

}  // namespace sme
