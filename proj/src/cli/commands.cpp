#include "sme/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sme/cli/checkpoint.hpp"
#include "sme/cli/run_config.hpp"
#include "sme/data/manifest.hpp"
#include "sme/data/synthetic.hpp"
#include "sme/error.hpp"
#include "sme/numcore/kernels.hpp"
#include "sme/train/gradcheck.hpp"
#include "sme/train/harness.hpp"

namespace sme::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : "nan"; }

// CSV file whose first line records the resolved configuration.
class CsvFile {
 public:
  CsvFile(const fs::path& path, const json& provenance) : path_(path) {
    if (path.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(path.parent_path(), ec);
    }
    out_.open(path, std::ios::trunc);
    if (!out_) throw IoError("cannot write '" + path.string() + "'");
    out_ << "# resolved_config=" << provenance.dump() << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw IoError("failed writing '" + path_.string() + "'");
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
}

void log_defaults(const RunConfig& rc, std::ostream& err) {
  for (const auto& key : rc.defaulted) {
    const bool from_data = key == "model.d_e" || key == "model.poi_categories" || key == "model.task_names";
    err << "config: " << key << " not set, using " << (from_data ? "the dataset's value" : "the default") << '\n';
  }
}

RunConfig load_config(const std::string& path, std::ostream& err) {
  RunConfig rc = path.empty() ? default_run_config() : load_run_config(path);
  log_defaults(rc, err);
  return rc;
}

struct Prepared {
  Dataset dataset;
  HarnessContext ctx;  // dataset pointer is set by context()

  HarnessContext context() const {
    HarnessContext c = ctx;
    c.dataset = &dataset;
    return c;
  }
};

// Reads the data named by --data (or data.path), resolves the config against
// it, and builds the shared split and target transform.
Prepared prepare(RunConfig& rc, const std::string& data_flag) {
  if (!data_flag.empty()) rc.data.path = data_flag;
  if (rc.data.path.empty()) throw ArgumentError("no dataset given (use --data or data.path)");
  Prepared p;
  p.dataset = read_dataset(rc.data.path);
  rc.resolve(p.dataset.manifest);
  p.ctx.split = split_dataset(p.dataset, rc.data.split_ratios, rc.data.split_seed);
  p.ctx.transform =
      fit_target_transform(p.dataset, p.ctx.split.train, rc.scale_requests(p.dataset.manifest.num_tasks));
  return p;
}

// The model a resolved config describes; single-task modes get the
// matching single-task allocation.
ModelConfig effective_model(const RunConfig& rc) {
  if (!rc.model.mode.single_task) return rc.model;
  ModelConfig mt = rc.model;
  mt.mode = TaskMode{};
  return single_task_config(mt, rc.model.mode.task);
}

void check_dims(const Manifest& expected, const Manifest& actual) {
  std::string diff;
  auto cmp = [&](const char* key, std::size_t e, std::size_t a) {
    if (e != a) diff += std::string(" ") + key + ": expected " + std::to_string(e) + ", got " + std::to_string(a) + ";";
  };
  cmp("d_e", expected.d_e, actual.d_e);
  cmp("poi_categories", expected.poi_categories, actual.poi_categories);
  cmp("num_tasks", expected.num_tasks, actual.num_tasks);
  if (diff.empty() && expected.task_names != actual.task_names) diff = " task names differ;";
  if (!diff.empty()) throw ConfigError("checkpoint and data dims differ:" + diff);
}

struct Loaded {
  Checkpoint ckpt;
  Dataset dataset;
};

Loaded load_for_export(const std::string& checkpoint, const std::string& data) {
  Loaded l{load_checkpoint(checkpoint), read_dataset(data)};
  check_dims(l.ckpt.manifest, l.dataset.manifest);
  if (l.dataset.region_capacity() > l.ckpt.model.n_regions) {
    throw ConfigError("data holds region ids up to " + std::to_string(l.dataset.region_capacity() - 1) +
                      " but the checkpoint embeds " + std::to_string(l.ckpt.model.n_regions) + " regions");
  }
  return l;
}

std::vector<std::size_t> rows_for(const Loaded& l, const std::string& split) {
  if (split == "all") {
    std::vector<std::size_t> all(l.dataset.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  const auto& idx = l.ckpt.split.part(parse_split_part(split));
  for (std::size_t i : idx) {
    if (i >= l.dataset.size()) {
      throw ConfigError("stored split refers to record " + std::to_string(i) + " but the data has " +
                        std::to_string(l.dataset.size()));
    }
  }
  return idx;
}

json provenance(const Checkpoint& ck, const json& extra) {
  json j = extra;
  j["run_config"] = ck.run_config;
  return j;
}

std::vector<std::string> metric_header(const std::vector<std::string>& tasks) {
  std::vector<std::string> h;
  for (const char* split : {"val", "test"}) {
    for (const auto& t : tasks) {
      for (const char* m : {"r2", "rmse", "mae"}) {
        h.push_back(std::string(split) + "_" + t + "_" + m + "_mean");
        h.push_back(std::string(split) + "_" + t + "_" + m + "_std");
      }
    }
    for (const char* m : {"r2", "rmse", "mae"}) {
      h.push_back(std::string(split) + "_avg_" + m + "_mean");
      h.push_back(std::string(split) + "_avg_" + m + "_std");
    }
  }
  for (const auto& t : tasks) h.push_back(t + "_active_experts");
  h.push_back("seeds");
  return h;
}

void append_metrics(std::vector<std::string>& row, const MultiSeedResult& r, std::size_t n_tasks) {
  auto add = [&](const MeanStd& ms) {
    row.push_back(num(ms.mean));
    row.push_back(num(ms.std));
  };
  for (const MetricsSummary* s : {&r.val, r.test ? &*r.test : nullptr}) {
    if (s == nullptr) {
      for (std::size_t i = 0; i < (n_tasks + 1) * 6; ++i) row.push_back("nan");
      continue;
    }
    for (const auto& t : s->tasks) {
      add(t.r2);
      add(t.rmse);
      add(t.mae);
    }
    add(s->avg_r2);
    add(s->avg_rmse);
    add(s->avg_mae);
  }
  for (double a : r.active_counts) row.push_back(num(a));
  row.push_back(std::to_string(r.runs.size()));
}

HarnessContext with_progress(HarnessContext ctx, std::ostream& err) {
  ctx.progress = [&err](const std::string& line) { err << line << '\n'; };
  return ctx;
}

// ---- commands ---------------------------------------------------------------

struct GenSynthOpts {
  std::string out;
  std::string format;
  SyntheticSpec spec;
};

int cmd_gen_synth(const GenSynthOpts& o, std::ostream& out) {
  o.spec.validate();
  const Dataset ds = gen_synthetic(o.spec);
  DatasetFormat fmt = DatasetFormat::urf1;
  if (o.format == "csv" || (o.format.empty() && fs::path(o.out).extension() == ".csv")) {
    fmt = DatasetFormat::csv;
  } else if (!o.format.empty() && o.format != "urf1") {
    throw ArgumentError("unknown --format '" + o.format + "' (expected urf1 or csv)");
  }
  const fs::path path(o.out);
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  write_dataset(ds, path, fmt);
  const json gen{{"regions", o.spec.regions},       {"d_e", o.spec.d_e},
                 {"poi_categories", o.spec.poi_categories}, {"num_tasks", o.spec.num_tasks},
                 {"latent_dim", o.spec.latent_dim}, {"noise_std", o.spec.noise_std},
                 {"seed", o.spec.seed}};
  std::ofstream m(manifest_path_for(path), std::ios::app);
  m << "generator=" << gen.dump() << '\n';
  if (!m) throw IoError("cannot append to manifest of '" + o.out + "'");
  out << "wrote " << ds.size() << " regions to " << o.out << '\n';
  return kOk;
}

struct TrainOpts {
  std::string config, data, out_dir, mode;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainOpts& o, std::ostream& out, std::ostream& err) {
  RunConfig rc = load_config(o.config, err);
  if (!o.mode.empty()) rc.mode = o.mode;
  Prepared p = prepare(rc, o.data);
  const ModelConfig mc = effective_model(rc);
  const std::uint64_t seed = o.seed.value_or(rc.train.seeds.front());
  const fs::path dir(o.out_dir);
  ensure_dir(dir);

  Rng init(seed);
  Model model = build_model(mc, p.dataset.region_capacity(), init);
  TrainResult tr = train(std::move(model), p.dataset, p.ctx.split, p.ctx.transform, rc.train, shuffle_seed_for(seed));

  json resolved = to_json(rc);
  resolved["seed"] = seed;

  const auto& tasks = mc.active_tasks();
  {
    CsvFile h(dir / "history.csv", resolved);
    std::vector<std::string> header{"epoch", "train_loss"};
    for (std::size_t t : tasks) {
      for (const char* m : {"r2", "rmse", "mae"}) header.push_back("val_" + mc.task_names[t] + "_" + m);
    }
    header.push_back("val_avg_r2");
    h.row(header);
    for (const auto& e : tr.history.epochs) {
      std::vector<std::string> row{std::to_string(e.epoch), num(e.train_loss)};
      for (std::size_t s = 0; s < tasks.size(); ++s) {
        if (e.val) {
          row.push_back(num(e.val->tasks[s].r2));
          row.push_back(num(e.val->tasks[s].rmse));
          row.push_back(num(e.val->tasks[s].mae));
        } else {
          row.insert(row.end(), {"nan", "nan", "nan"});
        }
      }
      row.push_back(e.val ? num(e.val->avg_r2) : "nan");
      h.row(row);
    }
    h.close();
  }

  Checkpoint ck{tr.best_model, p.dataset.manifest, p.ctx.transform, p.ctx.split, resolved};
  save_checkpoint(dir / "checkpoint.smck", ck);

  const bool orig = rc.train.metrics_in_original_space;
  auto metrics_json = [](const TaskMetrics& m) {
    json j = json::object();
    for (const auto& t : m.tasks) {
      j[t.task] = {{"r2", t.r2 ? json(*t.r2) : json(nullptr)}, {"rmse", t.rmse}, {"mae", t.mae}};
    }
    j["avg"] = {{"r2", m.avg_r2 ? json(*m.avg_r2) : json(nullptr)}, {"rmse", m.avg_rmse}, {"mae", m.avg_mae}};
    return j;
  };
  const ParameterCounts pc = count_parameters(tr.best_model);
  json summary{{"resolved_config", resolved},
               {"best_epoch", tr.history.best_epoch},
               {"epochs_run", tr.history.epochs.size()},
               {"steps", tr.history.steps},
               {"early_stopped", tr.history.early_stopped},
               {"wall_seconds", tr.history.wall_seconds},
               {"kernels", std::string(kernels::active().name)},
               {"experts_per_branch", mc.experts_per_branch()},
               {"eligible_per_task", mc.eligible_per_task()},
               {"parameters",
                {{"embeddings", pc.embeddings}, {"experts", pc.experts}, {"routers", pc.routers},
                 {"heads", pc.heads}, {"total", pc.total}}}};
  if (!p.ctx.split.val.empty()) summary["val"] = metrics_json(evaluate(tr.best_model, p.dataset, p.ctx.split.val, p.ctx.transform, orig));
  if (!p.ctx.split.test.empty()) summary["test"] = metrics_json(evaluate(tr.best_model, p.dataset, p.ctx.split.test, p.ctx.transform, orig));
  std::ofstream s(dir / "summary.json", std::ios::trunc);
  s << summary.dump(2) << '\n';
  if (!s) throw IoError("cannot write '" + (dir / "summary.json").string() + "'");

  out << "trained " << to_string(mc.mode, mc.task_names) << " model (" << mc.experts_per_branch()
      << " experts per branch) for " << tr.history.epochs.size() << " epochs, best epoch "
      << tr.history.best_epoch << '\n';
  if (summary.contains("val")) out << "val avg r2 " << summary["val"]["avg"]["r2"].dump() << '\n';
  out << "outputs in " << dir.string() << '\n';
  return kOk;
}

struct EvalOpts {
  std::string checkpoint, data, split = "test", out;
  bool original_space = false;
};

int cmd_eval(const EvalOpts& o, std::ostream& out) {
  Loaded l = load_for_export(o.checkpoint, o.data);
  const auto rows = rows_for(l, o.split);
  const TaskMetrics m = evaluate(l.ckpt.model, l.dataset, rows, l.ckpt.transform, o.original_space);

  std::vector<std::vector<std::string>> table{{"task", "r2", "rmse", "mae"}};
  for (const auto& t : m.tasks) table.push_back({t.task, num(t.r2), num(t.rmse), num(t.mae)});
  table.push_back({"AVG", num(m.avg_r2), num(m.avg_rmse), num(m.avg_mae)});
  for (const auto& r : table) out << r[0] << ',' << r[1] << ',' << r[2] << ',' << r[3] << '\n';
  if (!o.out.empty()) {
    CsvFile f(o.out, provenance(l.ckpt, {{"split", o.split}, {"original_space", o.original_space}}));
    for (const auto& r : table) f.row(r);
    f.close();
  }
  return kOk;
}

struct ExportOpts {
  std::string checkpoint, data, out, split = "all";
};

int cmd_export_gates(const ExportOpts& o, std::ostream& out) {
  Loaded l = load_for_export(o.checkpoint, o.data);
  const Model& model = l.ckpt.model;
  const auto& names = model.config.task_names;
  const auto rows = rows_for(l, o.split);
  const json prov = provenance(l.ckpt, {{"split", o.split}});

  struct Agg {
    double raw = 0.0, masked = 0.0;
    std::size_t active = 0;
  };
  // [head slot][branch][eligible position]
  std::vector<std::array<std::vector<Agg>, 2>> agg(model.heads.size());
  for (std::size_t s = 0; s < model.heads.size(); ++s) {
    for (BranchLabel b : kBranches) {
      agg[s][static_cast<std::size_t>(b)].resize(model.branch(b).routers[s].eligible.size());
    }
  }

  CsvFile f(o.out, prov);
  f.row({"region_id", "task", "branch", "expert_index", "expert_kind", "raw_gate", "masked_gate"});
  std::size_t n_rows = 0;
  for (std::size_t idx : rows) {
    const RegionRecord& rec = l.dataset.records[idx];
    const Prediction p = predict(model, rec, true);
    for (std::size_t g = 0; g < p.gates.size(); ++g) {
      const GateVector& gv = p.gates[g];
      const std::size_t slot = g / 2;
      const Branch& br = model.branch(gv.branch);
      const Router& router = br.routers[slot];
      auto& a = agg[slot][static_cast<std::size_t>(gv.branch)];
      for (std::size_t j = 0; j < gv.raw.size(); ++j) {
        const std::size_t e = router.eligible[j];
        f.row({std::to_string(rec.region_id), names[gv.task], std::string(to_string(gv.branch)), std::to_string(e),
               br.experts[e].kind.label(names), num(gv.raw[j]), num(gv.masked[j])});
        a[j].raw += gv.raw[j];
        a[j].masked += gv.masked[j];
        a[j].active += gv.masked[j] > 0.0;
        ++n_rows;
      }
    }
  }
  f.close();

  const fs::path path(o.out);
  const fs::path agg_path = path.parent_path() / (path.stem().string() + ".aggregate.csv");
  CsvFile fa(agg_path, prov);
  fa.row({"task", "branch", "expert_index", "expert_kind", "mean_raw_gate", "mean_masked_gate", "activation_rate"});
  const double n = static_cast<double>(std::max<std::size_t>(rows.size(), 1));
  for (std::size_t s = 0; s < model.heads.size(); ++s) {
    for (BranchLabel b : kBranches) {
      const Branch& br = model.branch(b);
      const Router& router = br.routers[s];
      const auto& a = agg[s][static_cast<std::size_t>(b)];
      for (std::size_t j = 0; j < a.size(); ++j) {
        const std::size_t e = router.eligible[j];
        fa.row({names[router.task], std::string(to_string(b)), std::to_string(e), br.experts[e].kind.label(names),
                num(a[j].raw / n), num(a[j].masked / n), num(static_cast<double>(a[j].active) / n)});
      }
    }
  }
  fa.close();
  out << "wrote " << n_rows << " gate rows to " << o.out << " and aggregates to " << agg_path.string() << '\n';
  return kOk;
}

int cmd_export_embeddings(const ExportOpts& o, std::ostream& out) {
  Loaded l = load_for_export(o.checkpoint, o.data);
  const Model& model = l.ckpt.model;
  const auto& names = model.config.task_names;
  const auto rows = rows_for(l, o.split);

  CsvFile f(o.out, provenance(l.ckpt, {{"split", o.split}}));
  std::vector<std::string> header{"region_id", "task", "branch", "source"};
  for (std::size_t i = 0; i < model.config.expert_out; ++i) header.push_back("u" + std::to_string(i));
  f.row(header);
  auto emit = [&](const RegionRecord& rec, std::size_t task, BranchLabel b, const std::string& source, const Vector& v) {
    std::vector<std::string> row{std::to_string(rec.region_id), names[task], std::string(to_string(b)), source};
    for (double x : v) row.push_back(num(x));
    f.row(row);
  };
  std::size_t n_rows = 0;
  for (std::size_t idx : rows) {
    const RegionRecord& rec = l.dataset.records[idx];
    const FusedInput z = fuse_inputs(model, rec);
    for (const Head& h : model.heads) {
      for (BranchLabel b : kBranches) {
        const SmeOutput so = sme_forward(model, b, h.task, z.z(b));
        for (const auto& [e, v] : so.expert_outputs) emit(rec, h.task, b, "expert_" + std::to_string(e), v);
        emit(rec, h.task, b, "fused", so.fused);
        n_rows += so.expert_outputs.size() + 1;
      }
    }
  }
  f.close();
  out << "wrote " << n_rows << " embedding rows to " << o.out << '\n';
  return kOk;
}

struct HarnessOpts {
  std::string config, data, spec, out;
};

int cmd_ablation(const HarnessOpts& o, std::ostream& out, std::ostream& err) {
  RunConfig rc = load_config(o.config, err);
  const AblationSpec spec = load_ablation_spec(o.spec);
  Prepared p = prepare(rc, o.data);
  check_budget(spec, rc.model.num_tasks());
  const auto results = run_ablation(with_progress(p.context(), err), rc.model, spec, rc.train);

  json prov = to_json(rc);
  prov["spec"] = spec.name;
  CsvFile f(o.out, prov);
  std::vector<std::string> header{"row", "n_specific", "n_shared", "n_dual", "eligible_per_task", "experts_per_branch"};
  const auto mh = metric_header(rc.model.task_names);
  header.insert(header.end(), mh.begin(), mh.end());
  f.row(header);
  for (const auto& r : results) {
    std::vector<std::string> row{r.row.name,
                                 std::to_string(r.row.n_specific),
                                 std::to_string(r.row.n_shared),
                                 std::to_string(r.row.n_dual),
                                 std::to_string(r.eligible_per_task),
                                 std::to_string(r.experts_per_branch)};
    append_metrics(row, r.result, rc.model.num_tasks());
    f.row(row);
    out << r.row.name << ": val avg r2 " << num(r.result.val.avg_r2.mean) << '\n';
  }
  f.close();
  out << "wrote " << results.size() << " rows to " << o.out << '\n';
  return kOk;
}

int cmd_sweep(const HarnessOpts& o, std::ostream& out, std::ostream& err) {
  RunConfig rc = load_config(o.config, err);
  const SweepSpec spec = load_sweep_spec(o.spec);
  Prepared p = prepare(rc, o.data);
  const auto results = run_sweep(with_progress(p.context(), err), rc.model, spec, rc.train);

  json prov = to_json(rc);
  prov["spec"] = spec.name;
  CsvFile f(o.out, prov);
  std::vector<std::string> header{"axis", "value"};
  const auto mh = metric_header(rc.model.task_names);
  header.insert(header.end(), mh.begin(), mh.end());
  f.row(header);
  for (const auto& r : results) {
    std::vector<std::string> row{std::string(to_string(spec.axis)), num(r.value)};
    append_metrics(row, r.result, rc.model.num_tasks());
    f.row(row);
    out << to_string(spec.axis) << "=" << num(r.value) << ": val avg r2 " << num(r.result.val.avg_r2.mean) << '\n';
  }
  f.close();
  out << "wrote " << results.size() << " rows to " << o.out << '\n';
  return kOk;
}

struct GradcheckOpts {
  std::uint64_t seed = 1;
  double h = 1e-5;
  bool corrupt = false;
};

int cmd_gradcheck(const GradcheckOpts& o, std::ostream& out) {
  constexpr double kTolerance = 1e-4;
  MicroProblem p = make_micro_problem(o.seed);
  const GradCheckReport r = check_model_gradients(p, o.h, o.corrupt);
  out << "group,max_rel_error\n";
  for (const auto& [group, e] : r.by_group()) out << group << ',' << num(e) << '\n';
  out << "parameters " << p.model.tape.size() << ", worst slice " << r.worst_slice << ", max relative error "
      << num(r.max_rel_error) << '\n';
  if (!(r.max_rel_error < kTolerance)) {
    throw VerificationError("gradient check failed: max relative error " + num(r.max_rel_error) + " in '" +
                            r.worst_slice + "' (tolerance 1e-4)");
  }
  out << "gradient check passed\n";
  return kOk;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (const auto* se = dynamic_cast<const Error*>(&e)) {
    switch (se->kind()) {
      case ErrorKind::shape:
      case ErrorKind::config:
      case ErrorKind::lookup:
      case ErrorKind::argument:
        return kConfig;
      case ErrorKind::data:
      case ErrorKind::format:
      case ErrorKind::io:
        return kIo;
      case ErrorKind::numeric:
        return kNumeric;
      case ErrorKind::verification:
        return kVerification;
    }
  }
  if (dynamic_cast<const CLI::Error*>(&e) != nullptr) return kConfig;
  if (dynamic_cast<const json::exception*>(&e) != nullptr) return kConfig;
  if (dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) return kIo;
  return 1;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-task sparse mixture-of-experts trainer for urban indicators", "sparse-sme"};
  app.require_subcommand(1);

  GenSynthOpts gs;
  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic latent-factor dataset");
  gen->add_option("--out", gs.out, "Output dataset path (.urf1 or .csv)")->required();
  gen->add_option("--regions", gs.spec.regions, "Number of regions K")->capture_default_str();
  gen->add_option("--d-e", gs.spec.d_e, "Image/text feature width")->capture_default_str();
  gen->add_option("--categories", gs.spec.poi_categories, "POI categories C")->capture_default_str();
  gen->add_option("--tasks", gs.spec.num_tasks, "Number of tasks T")->capture_default_str();
  gen->add_option("--latent", gs.spec.latent_dim, "Latent factor dimension")->capture_default_str();
  gen->add_option("--noise", gs.spec.noise_std, "Label noise standard deviation")->capture_default_str();
  gen->add_option("--seed", gs.spec.seed, "Generator seed")->capture_default_str();
  gen->add_option("--format", gs.format, "urf1 or csv (default: from the extension)");

  TrainOpts tr;
  std::uint64_t train_seed = 0;
  auto* trn = app.add_subcommand("train", "Train one model and write checkpoint, history.csv and summary.json");
  trn->add_option("--config", tr.config, "RunConfig JSON (absent keys take defaults)");
  trn->add_option("--data", tr.data, "Dataset path (overrides data.path)");
  trn->add_option("--out-dir", tr.out_dir, "Output directory")->required();
  trn->add_option("--mode", tr.mode, "mt or st:<task> (overrides model.mode)");
  auto* seed_opt = trn->add_option("--seed", train_seed, "Run seed (default: first of train.seeds)");

  EvalOpts ev;
  auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint on a stored split");
  evl->add_option("--checkpoint", ev.checkpoint)->required();
  evl->add_option("--data", ev.data)->required();
  evl->add_option("--split", ev.split, "train, val, test or all")->capture_default_str();
  evl->add_option("--out", ev.out, "Also write the table to this csv");
  evl->add_flag("--original-space", ev.original_space, "Invert the target transform before scoring");

  ExportOpts eg;
  auto* gates = app.add_subcommand("export-gates", "Export raw and masked gate weights per region");
  gates->add_option("--checkpoint", eg.checkpoint)->required();
  gates->add_option("--data", eg.data)->required();
  gates->add_option("--out", eg.out)->required();
  gates->add_option("--split", eg.split, "train, val, test or all")->capture_default_str();

  ExportOpts ee;
  auto* emb = app.add_subcommand("export-embeddings", "Export active expert outputs and fused representations");
  emb->add_option("--checkpoint", ee.checkpoint)->required();
  emb->add_option("--data", ee.data)->required();
  emb->add_option("--out", ee.out)->required();
  emb->add_option("--split", ee.split, "train, val, test or all")->capture_default_str();

  HarnessOpts ab;
  ab.spec = "paper-appendix-b";
  auto* abl = app.add_subcommand("ablation", "Train every expert allocation of an ablation spec");
  abl->add_option("--config", ab.config);
  abl->add_option("--data", ab.data);
  abl->add_option("--spec", ab.spec, "Built-in name or JSON file")->capture_default_str();
  abl->add_option("--out", ab.out)->required();

  HarnessOpts sw;
  sw.spec = "paper-appendix-c-epsilon";
  auto* swp = app.add_subcommand("sweep", "Train one model per value of a hyper-parameter sweep");
  swp->add_option("--config", sw.config);
  swp->add_option("--data", sw.data);
  swp->add_option("--spec", sw.spec, "Built-in name or JSON file")->capture_default_str();
  swp->add_option("--out", sw.out)->required();

  GradcheckOpts gc;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of the full model gradient");
  grad->add_option("--seed", gc.seed)->capture_default_str();
  grad->add_option("--step", gc.h, "Central-difference step")->capture_default_str();
  grad->add_flag("--corrupt-gradient", gc.corrupt)->group("");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kOk : kConfig;
    }
    if (*gen) return cmd_gen_synth(gs, out);
    if (*trn) {
      if (*seed_opt) tr.seed = train_seed;
      return cmd_train(tr, out, err);
    }
    if (*evl) return cmd_eval(ev, out);
    if (*gates) return cmd_export_gates(eg, out);
    if (*emb) return cmd_export_embeddings(ee, out);
    if (*abl) return cmd_ablation(ab, out, err);
    if (*swp) return cmd_sweep(sw, out, err);
    if (*grad) return cmd_gradcheck(gc, out);
    return kConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace sme::cli
