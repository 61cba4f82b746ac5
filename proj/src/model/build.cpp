#include <cmath>

#include "sme/error.hpp"
#include "sme/model/model.hpp"

namespace sme {

ExpertKind ExpertKind::dual(std::size_t a, std::size_t b) {
  if (a == b) throw ConfigError("dual expert needs two distinct tasks");
  return {Type::dual, std::min(a, b), std::max(a, b)};
}

bool ExpertKind::eligible_for(std::size_t task) const {
  switch (type) {
    case Type::specific: return task_a == task;
    case Type::dual: return task_a == task || task_b == task;
    case Type::shared: return true;
  }
  return false;
}

std::string ExpertKind::label(const std::vector<std::string>& task_names) const {
  switch (type) {
    case Type::specific: return "specific:" + task_names.at(task_a);
    case Type::dual: return "dual:" + task_names.at(task_a) + "+" + task_names.at(task_b);
    case Type::shared: return "shared";
  }
  return "shared";
}

std::string_view to_string(BranchLabel b) { return b == BranchLabel::image ? "image" : "text"; }

std::size_t Model::active_slot(std::size_t task) const {
  for (std::size_t s = 0; s < heads.size(); ++s) {
    if (heads[s].task == task) return s;
  }
  throw LookupError("task " + std::to_string(task) + " is not active in this model");
}

namespace {

void glorot(ParamTape& tape, ParamTape::SliceId id, Rng& rng) {
  const auto& s = tape.slice(id);
  const double limit = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
  for (double& v : tape.values(id)) v = rng.uniform(-limit, limit);
}

void gaussian(ParamTape& tape, ParamTape::SliceId id, Rng& rng, double stddev) {
  for (double& v : tape.values(id)) v = rng.normal(0.0, stddev);
}

}  // namespace

Model build_model(const ModelConfig& config, std::size_t n_regions, Rng& rng) {
  config.validate();
  if (n_regions < 1) throw ArgumentError("build_model: n_regions must be >= 1");

  Model m;
  m.config = config;
  m.n_regions = n_regions;
  auto& tape = m.tape;
  const auto& names = config.task_names;
  const std::vector<std::size_t> active = config.active_tasks();
  const std::size_t d_in = config.d_in();

  m.region_embedding = tape.add("region_embedding", "embeddings", n_regions, config.d_r);
  gaussian(tape, m.region_embedding, rng, 0.02);
  m.poi_w = tape.add("poi.W", "embeddings", config.d_p, config.poi_categories);
  glorot(tape, m.poi_w, rng);
  m.poi_b = tape.add("poi.b", "embeddings", config.d_p, 1);

  std::vector<ExpertKind> pool;
  for (std::size_t t : active) {
    for (std::size_t i = 0; i < config.n_specific; ++i) pool.push_back(ExpertKind::specific(t));
  }
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (std::size_t b = a + 1; b < active.size(); ++b) {
      for (std::size_t i = 0; i < config.n_dual; ++i) pool.push_back(ExpertKind::dual(active[a], active[b]));
    }
  }
  for (std::size_t i = 0; i < config.n_shared; ++i) pool.push_back(ExpertKind::shared());

  for (BranchLabel bl : kBranches) {
    Branch& br = m.branches[static_cast<std::size_t>(bl)];
    br.label = bl;
    const std::string prefix(to_string(bl));
    for (std::size_t e = 0; e < pool.size(); ++e) {
      const std::string p = prefix + ".expert[" + std::to_string(e) + "].";
      Expert ex{pool[e], 0, 0, 0, 0};
      ex.w1 = tape.add(p + "W1", "experts", config.expert_hidden, d_in);
      ex.b1 = tape.add(p + "b1", "experts", config.expert_hidden, 1);
      ex.w2 = tape.add(p + "W2", "experts", config.expert_out, config.expert_hidden);
      ex.b2 = tape.add(p + "b2", "experts", config.expert_out, 1);
      glorot(tape, ex.w1, rng);
      glorot(tape, ex.w2, rng);
      br.experts.push_back(ex);
    }
    for (std::size_t t : active) {
      Router r;
      r.task = t;
      for (std::size_t e = 0; e < pool.size(); ++e) {
        if (pool[e].eligible_for(t)) r.eligible.push_back(e);
      }
      if (r.eligible.empty()) throw ConfigError("no experts eligible for task '" + names[t] + "'");
      const std::string p = prefix + ".router[" + names[t] + "].";
      r.w = tape.add(p + "W", "routers", r.eligible.size(), d_in);
      r.b = tape.add(p + "b", "routers", r.eligible.size(), 1);
      glorot(tape, r.w, rng);
      br.routers.push_back(std::move(r));
    }
  }

  for (std::size_t t : active) {
    Head h;
    h.task = t;
    h.linear = config.head_hidden == 0;
    const std::string p = "head[" + names[t] + "].";
    const std::size_t in = 2 * config.expert_out;
    if (h.linear) {
      h.w1 = tape.add(p + "W1", "heads", 1, in);
      h.b1 = tape.add(p + "b1", "heads", 1, 1);
      h.w2 = h.w1;
      h.b2 = h.b1;
      glorot(tape, h.w1, rng);
    } else {
      h.w1 = tape.add(p + "W1", "heads", config.head_hidden, in);
      h.b1 = tape.add(p + "b1", "heads", config.head_hidden, 1);
      h.w2 = tape.add(p + "W2", "heads", 1, config.head_hidden);
      h.b2 = tape.add(p + "b2", "heads", 1, 1);
      glorot(tape, h.w1, rng);
      glorot(tape, h.w2, rng);
    }
    m.heads.push_back(h);
  }
  return m;
}

std::vector<std::size_t> eligible_experts(const Model& model, std::size_t task) {
  if (task >= model.config.num_tasks()) {
    throw LookupError("unknown task index " + std::to_string(task));
  }
  return model.branch(BranchLabel::image).routers.at(model.active_slot(task)).eligible;
}

ParameterCounts count_parameters(const Model& model) {
  ParameterCounts c;
  for (const auto& s : model.tape.slices()) {
    if (s.group == "embeddings") c.embeddings += s.size();
    else if (s.group == "experts") c.experts += s.size();
    else if (s.group == "routers") c.routers += s.size();
    else if (s.group == "heads") c.heads += s.size();
  }
  c.total = c.embeddings + c.experts + c.routers + c.heads;
  return c;
}

}  // namespace sme
