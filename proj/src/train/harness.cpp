#include "sme/train/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sme/error.hpp"

namespace sme {

namespace {

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return out;
}

double r2_or_nan(const std::optional<double>& r) {
  return r ? *r : std::numeric_limits<double>::quiet_NaN();
}

// Runs fn(i) for i in [0, n) on up to harness_threads() workers. Results are
// written by index so ordering never depends on scheduling.
void parallel_rows(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(n, harness_threads());
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void check_context(const HarnessContext& ctx) {
  if (ctx.dataset == nullptr) throw ArgumentError("harness: no dataset");
  if (ctx.split.train.empty()) throw ArgumentError("harness: empty training split");
}

SeedRun run_one(const HarnessContext& ctx, const ModelConfig& model_config,
                const TrainConfig& train_config, std::uint64_t seed) {
  const Dataset& ds = *ctx.dataset;
  Rng init(seed);
  Model model = build_model(model_config, ds.region_capacity(), init);
  TrainResult tr = train(std::move(model), ds, ctx.split, ctx.transform, train_config,
                         shuffle_seed_for(seed));
  SeedRun run;
  run.seed = seed;
  run.history = std::move(tr.history);
  const bool orig = train_config.metrics_in_original_space;
  const auto& eval_rows = ctx.split.val.empty() ? ctx.split.train : ctx.split.val;
  run.val = evaluate(tr.best_model, ds, eval_rows, ctx.transform, orig);
  if (!ctx.split.test.empty()) run.test = evaluate(tr.best_model, ds, ctx.split.test, ctx.transform, orig);
  run.active_counts = mean_active_counts(tr.best_model, ds, eval_rows);
  return run;
}

MultiSeedResult summarize(std::vector<SeedRun> runs) {
  MultiSeedResult out;
  std::vector<TaskMetrics> val, test;
  for (const auto& r : runs) {
    val.push_back(r.val);
    if (r.test) test.push_back(*r.test);
  }
  out.val = MetricsSummary::of(val);
  if (!test.empty() && test.size() == runs.size()) out.test = MetricsSummary::of(test);
  if (!runs.empty()) {
    out.active_counts.assign(runs.front().active_counts.size(), 0.0);
    for (const auto& r : runs) {
      for (std::size_t s = 0; s < out.active_counts.size(); ++s) out.active_counts[s] += r.active_counts[s];
    }
    for (double& v : out.active_counts) v /= static_cast<double>(runs.size());
  }
  out.runs = std::move(runs);
  return out;
}

// All (row, seed) pairs are independent, so they share one worker pool.
std::vector<MultiSeedResult> run_grid(const HarnessContext& ctx, const std::vector<ModelConfig>& configs,
                                      const std::vector<std::string>& labels, const TrainConfig& train_config) {
  check_context(ctx);
  train_config.validate(ctx.dataset->manifest.num_tasks);
  for (const auto& c : configs) c.validate();
  const std::size_t n_seeds = train_config.seeds.size();
  std::vector<SeedRun> flat(configs.size() * n_seeds);
  std::mutex log_mutex;
  parallel_rows(flat.size(), [&](std::size_t i) {
    const std::size_t row = i / n_seeds;
    const std::uint64_t seed = train_config.seeds[i % n_seeds];
    flat[i] = run_one(ctx, configs[row], train_config, seed);
    if (ctx.progress) {
      std::ostringstream msg;
      msg << labels[row] << " seed " << seed << ": best epoch " << flat[i].history.best_epoch
          << ", val avg r2 " << r2_or_nan(flat[i].val.avg_r2);
      std::lock_guard lock(log_mutex);
      ctx.progress(msg.str());
    }
  });
  std::vector<MultiSeedResult> out;
  for (std::size_t row = 0; row < configs.size(); ++row) {
    std::vector<SeedRun> runs(std::make_move_iterator(flat.begin() + row * n_seeds),
                              std::make_move_iterator(flat.begin() + (row + 1) * n_seeds));
    out.push_back(summarize(std::move(runs)));
  }
  return out;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("spec file '" + path + "': " + e.what());
  }
}

void reject_unknown(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok |= key == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

}  // namespace

std::size_t harness_threads() {
  const char* env = std::getenv("SPARSE_SME_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw ConfigError(std::string("SPARSE_SME_THREADS must be a positive integer, got '") + env + "'");
  return static_cast<std::size_t>(v);
}

MetricsSummary MetricsSummary::of(const std::vector<TaskMetrics>& runs) {
  if (runs.empty()) throw ArgumentError("MetricsSummary: no runs");
  MetricsSummary out;
  const std::size_t n_tasks = runs.front().tasks.size();
  for (std::size_t t = 0; t < n_tasks; ++t) {
    std::vector<double> r2s, rmses, maes;
    for (const auto& r : runs) {
      r2s.push_back(r2_or_nan(r.tasks.at(t).r2));
      rmses.push_back(r.tasks.at(t).rmse);
      maes.push_back(r.tasks.at(t).mae);
    }
    out.tasks.push_back({runs.front().tasks[t].task, mean_std(r2s), mean_std(rmses), mean_std(maes)});
  }
  std::vector<double> a, b, c;
  for (const auto& r : runs) {
    a.push_back(r2_or_nan(r.avg_r2));
    b.push_back(r.avg_rmse);
    c.push_back(r.avg_mae);
  }
  out.avg_r2 = mean_std(a);
  out.avg_rmse = mean_std(b);
  out.avg_mae = mean_std(c);
  return out;
}

const TaskSummary& MetricsSummary::task(std::string_view name) const {
  for (const auto& t : tasks) {
    if (t.task == name) return t;
  }
  throw LookupError("no summary for task '" + std::string(name) + "'");
}

MultiSeedResult run_multi_seed(const HarnessContext& ctx, const ModelConfig& model_config,
                               const TrainConfig& train_config) {
  return std::move(run_grid(ctx, {model_config}, {to_string(model_config.mode, model_config.task_names)},
                            train_config).front());
}

ModelConfig single_task_config(const ModelConfig& mt_config, std::size_t task) {
  if (task >= mt_config.num_tasks()) {
    throw LookupError("task index " + std::to_string(task) + " out of range");
  }
  ModelConfig mt = mt_config;
  mt.mode = TaskMode{};
  ModelConfig st = mt_config;
  st.mode = TaskMode{true, task};
  st.n_specific = mt.eligible_per_task();
  st.n_dual = 0;
  st.n_shared = 0;
  return st;
}

MultiSeedResult run_single_task(const HarnessContext& ctx, const ModelConfig& mt_config,
                                std::size_t task, const TrainConfig& train_config) {
  TrainConfig tc = train_config;
  tc.lambda.clear();
  const ModelConfig st = single_task_config(mt_config, task);
  return std::move(run_grid(ctx, {st}, {to_string(st.mode, st.task_names)}, tc).front());
}

AblationSpec paper_appendix_b() {
  AblationSpec spec;
  spec.name = "paper-appendix-b";
  spec.budget = 16;
  const std::size_t rows[7][3] = {{16, 0, 0}, {0, 16, 0}, {0, 0, 8}, {8, 8, 0},
                                  {8, 0, 4},  {0, 8, 4},  {8, 4, 2}};
  for (const auto& r : rows) {
    const std::string name = std::to_string(r[0]) + "|" + std::to_string(r[1]) + "|" + std::to_string(r[2]);
    spec.rows.push_back({name, r[0], r[1], r[2]});
  }
  return spec;
}

AblationSpec load_ablation_spec(const std::string& name_or_path) {
  if (name_or_path == "paper-appendix-b") return paper_appendix_b();
  const auto j = read_json_file(name_or_path);
  AblationSpec spec;
  try {
    reject_unknown(j, {"name", "budget", "rows"}, "ablation spec");
    spec.name = j.value("name", name_or_path);
    spec.budget = j.value("budget", std::size_t{16});
    for (const auto& r : j.at("rows")) {
      reject_unknown(r, {"name", "n_specific", "n_shared", "n_dual"}, "ablation row");
      AblationRow row;
      row.n_specific = r.value("n_specific", std::size_t{0});
      row.n_shared = r.value("n_shared", std::size_t{0});
      row.n_dual = r.value("n_dual", std::size_t{0});
      row.name = r.value("name", std::to_string(row.n_specific) + "|" + std::to_string(row.n_shared) + "|" +
                                     std::to_string(row.n_dual));
      spec.rows.push_back(row);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("ablation spec '" + name_or_path + "': " + e.what());
  }
  if (spec.rows.empty()) throw ConfigError("ablation spec '" + name_or_path + "' has no rows");
  return spec;
}

void check_budget(const AblationSpec& spec, std::size_t num_tasks) {
  if (num_tasks == 0) throw ConfigError("ablation needs at least one task");
  for (std::size_t i = 0; i < spec.rows.size(); ++i) {
    const auto& r = spec.rows[i];
    const std::size_t m = r.n_specific + (num_tasks - 1) * r.n_dual + r.n_shared;
    if (m != spec.budget) {
      throw ConfigError("ablation row " + std::to_string(i) + " ('" + r.name + "') gives " +
                        std::to_string(m) + " experts per task, budget is " + std::to_string(spec.budget));
    }
  }
}

std::vector<AblationResult> run_ablation(const HarnessContext& ctx, const ModelConfig& base,
                                         const AblationSpec& spec, const TrainConfig& train_config) {
  if (base.mode.single_task) throw ConfigError("ablation runs multi-task models");
  check_budget(spec, base.num_tasks());
  std::vector<ModelConfig> configs;
  std::vector<std::string> labels;
  for (const auto& r : spec.rows) {
    ModelConfig c = base;
    c.n_specific = r.n_specific;
    c.n_shared = r.n_shared;
    c.n_dual = r.n_dual;
    configs.push_back(c);
    labels.push_back("ablation " + r.name);
  }
  auto results = run_grid(ctx, configs, labels, train_config);
  std::vector<AblationResult> out;
  for (std::size_t i = 0; i < spec.rows.size(); ++i) {
    out.push_back({spec.rows[i], configs[i].eligible_per_task(), configs[i].experts_per_branch(),
                   std::move(results[i])});
  }
  return out;
}

SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "epsilon") return SweepAxis::epsilon;
  if (s == "d_r") return SweepAxis::d_r;
  throw ConfigError("unknown sweep axis '" + std::string(s) + "' (expected epsilon or d_r)");
}

std::string_view to_string(SweepAxis a) { return a == SweepAxis::epsilon ? "epsilon" : "d_r"; }

SweepSpec paper_appendix_c_epsilon() {
  return {"paper-appendix-c-epsilon", SweepAxis::epsilon, {0.0, 0.01, 0.02, 0.03, 0.04}};
}

SweepSpec paper_appendix_c_d_r() { return {"paper-appendix-c-d_r", SweepAxis::d_r, {2, 4, 6, 8, 10}}; }

SweepSpec load_sweep_spec(const std::string& name_or_path) {
  if (name_or_path == "paper-appendix-c-epsilon") return paper_appendix_c_epsilon();
  if (name_or_path == "paper-appendix-c-d_r") return paper_appendix_c_d_r();
  const auto j = read_json_file(name_or_path);
  SweepSpec spec;
  try {
    reject_unknown(j, {"name", "axis", "values"}, "sweep spec");
    spec.name = j.value("name", name_or_path);
    spec.axis = parse_sweep_axis(j.at("axis").get<std::string>());
    spec.values = j.at("values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("sweep spec '" + name_or_path + "': " + e.what());
  }
  if (spec.values.empty()) throw ConfigError("sweep spec '" + name_or_path + "' has no values");
  return spec;
}

ModelConfig apply_sweep_value(const ModelConfig& base, SweepAxis axis, double value) {
  ModelConfig c = base;
  if (axis == SweepAxis::epsilon) {
    c.epsilon = value;
  } else {
    if (!(value >= 0.0) || value != std::floor(value)) {
      throw ConfigError("d_r sweep value must be a nonnegative integer, got " + std::to_string(value));
    }
    c.d_r = static_cast<std::size_t>(value);
  }
  c.validate();
  return c;
}

std::vector<SweepResult> run_sweep(const HarnessContext& ctx, const ModelConfig& base,
                                   const SweepSpec& spec, const TrainConfig& train_config) {
  std::vector<ModelConfig> configs;
  std::vector<std::string> labels;
  for (double v : spec.values) {
    configs.push_back(apply_sweep_value(base, spec.axis, v));
    std::ostringstream label;
    label << to_string(spec.axis) << "=" << v;
    labels.push_back(label.str());
  }
  auto results = run_grid(ctx, configs, labels, train_config);
  std::vector<SweepResult> out;
  for (std::size_t i = 0; i < spec.values.size(); ++i) out.push_back({spec.values[i], std::move(results[i])});
  return out;
}

}  // namespace sme
