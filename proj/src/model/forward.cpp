#include <algorithm>

#include "forward_cache.hpp"
#include "sme/error.hpp"
#include "sme/numcore/kernels.hpp"

namespace sme {

namespace detail {

void check_record(const Model& model, const RegionRecord& record) {
  const auto& c = model.config;
  if (record.region_id >= model.n_regions) {
    throw LookupError("region " + std::to_string(record.region_id) +
                      " has no embedding (model covers " + std::to_string(model.n_regions) +
                      " regions)");
  }
  if (record.image_feat.size() != c.d_e || record.text_feat.size() != c.d_e) {
    throw ShapeError("region " + std::to_string(record.region_id) + ": feature length " +
                     std::to_string(record.image_feat.size()) + "/" +
                     std::to_string(record.text_feat.size()) + " but model expects d_e=" +
                     std::to_string(c.d_e));
  }
  if (record.poi_counts.size() != c.poi_categories) {
    throw ShapeError("region " + std::to_string(record.region_id) + ": " +
                     std::to_string(record.poi_counts.size()) + " POI categories but model expects " +
                     std::to_string(c.poi_categories));
  }
}

void run_expert(const Model& model, const Expert& expert, std::span<const double> z,
                ExpertCache& cache) {
  const auto& c = model.config;
  const auto& k = kernels::active();
  const auto& tape = model.tape;
  cache.pre_hidden.resize(c.expert_hidden);
  k.gemv(tape.values(expert.w1).data(), c.expert_hidden, z.size(), z.data(),
         tape.values(expert.b1).data(), cache.pre_hidden.data());
  cache.hidden = activation(cache.pre_hidden, c.activation);
  cache.pre_out.resize(c.expert_out);
  k.gemv(tape.values(expert.w2).data(), c.expert_out, c.expert_hidden, cache.hidden.data(),
         tape.values(expert.b2).data(), cache.pre_out.data());
  cache.out = c.sigma == SigmaKind::layer_norm ? layer_norm(cache.pre_out, c.norm_eps) : cache.pre_out;
}

namespace {

Vector router_logits(const Model& model, const Router& router, std::span<const double> z) {
  const auto& tape = model.tape;
  return affine_forward(z, tape.value_matrix(router.w), tape.values(router.b));
}

Vector head_forward(const Model& model, const Head& head, std::span<const double> input,
                    HeadCache* cache) {
  const auto& tape = model.tape;
  const auto& c = model.config;
  Vector a = affine_forward(input, tape.value_matrix(head.w1), tape.values(head.b1));
  if (head.linear) {
    if (cache) cache->input.assign(input.begin(), input.end());
    return a;
  }
  Vector h = activation(a, c.activation);
  Vector y = affine_forward(h, tape.value_matrix(head.w2), tape.values(head.b2));
  if (cache) {
    cache->input.assign(input.begin(), input.end());
    cache->pre_hidden = std::move(a);
    cache->hidden = std::move(h);
  }
  return y;
}

}  // namespace

void forward_cached(const Model& model, const RegionRecord& record, ForwardCache& cache) {
  const auto& c = model.config;
  cache.input = fuse_inputs(model, record);
  const auto& k = kernels::active();
  const std::size_t slots = model.heads.size();

  for (BranchLabel bl : kBranches) {
    const Branch& br = model.branch(bl);
    BranchCache& bc = cache.branches[static_cast<std::size_t>(bl)];
    const Vector& z = cache.input.z(bl);
    bc.gates.clear();
    bc.slot_of_expert.assign(br.experts.size(), -1);

    std::vector<char> needed(br.experts.size(), 0);
    for (std::size_t s = 0; s < slots; ++s) {
      const Router& r = br.routers[s];
      GateVector g = mask_gates(softmax(router_logits(model, r, z)), c.epsilon, c.fallback);
      g.task = r.task;
      g.branch = bl;
      for (std::size_t m = 0; m < r.eligible.size(); ++m) {
        if (g.masked[m] != 0.0) needed[r.eligible[m]] = 1;
      }
      bc.gates.push_back(std::move(g));
    }

    // Each expert is evaluated once per branch and shared by all tasks that retain it.
    std::size_t n_needed = 0;
    for (char n : needed) n_needed += n;
    bc.experts.resize(n_needed);
    std::size_t next = 0;
    for (std::size_t e = 0; e < br.experts.size(); ++e) {
      if (!needed[e]) continue;
      bc.experts[next].index = e;
      run_expert(model, br.experts[e], z, bc.experts[next]);
      bc.slot_of_expert[e] = static_cast<int>(next);
      ++next;
    }

    bc.fused.assign(slots, Vector(c.expert_out, 0.0));
    for (std::size_t s = 0; s < slots; ++s) {
      const Router& r = br.routers[s];
      const GateVector& g = bc.gates[s];
      for (std::size_t m = 0; m < r.eligible.size(); ++m) {
        if (g.masked[m] == 0.0) continue;
        const auto& out = bc.experts[bc.slot_of_expert[r.eligible[m]]].out;
        k.axpy(g.masked[m], out.data(), bc.fused[s].data(), c.expert_out);
      }
    }
  }

  cache.heads.resize(slots);
  cache.y.assign(slots, 0.0);
  Vector joined(2 * c.expert_out);
  for (std::size_t s = 0; s < slots; ++s) {
    const auto& ui = cache.branches[0].fused[s];
    const auto& ut = cache.branches[1].fused[s];
    std::copy(ui.begin(), ui.end(), joined.begin());
    std::copy(ut.begin(), ut.end(), joined.begin() + static_cast<std::ptrdiff_t>(c.expert_out));
    cache.y[s] = head_forward(model, model.heads[s], joined, &cache.heads[s])[0];
  }
}

}  // namespace detail

FusedInput fuse_inputs(const Model& model, const RegionRecord& record) {
  detail::check_record(model, record);
  const auto& c = model.config;
  const auto& tape = model.tape;
  FusedInput in;
  in.poi_features = poi_featurize(record.poi_counts);
  Vector p;
  if (c.d_p > 0) p = affine_forward(in.poi_features, tape.value_matrix(model.poi_w), tape.values(model.poi_b));
  const auto region = tape.value_matrix(model.region_embedding).row(record.region_id);

  auto build = [&](const Vector& e) {
    Vector z;
    z.reserve(c.d_in());
    z.insert(z.end(), e.begin(), e.end());
    z.insert(z.end(), region.begin(), region.end());
    z.insert(z.end(), p.begin(), p.end());
    return z;
  };
  in.z_image = build(record.image_feat);
  in.z_text = build(record.text_feat);
  return in;
}

Vector expert_forward(const Model& model, const Expert& expert, std::span<const double> z) {
  if (z.size() != model.config.d_in()) {
    throw ShapeError("expert_forward: z has length " + std::to_string(z.size()) +
                     ", expected d_in=" + std::to_string(model.config.d_in()));
  }
  detail::ExpertCache cache;
  detail::run_expert(model, expert, z, cache);
  return cache.out;
}

GateVector mask_gates(Vector raw, double epsilon, GateFallback fallback) {
  GateVector g;
  g.masked.assign(raw.size(), 0.0);
  for (std::size_t m = 0; m < raw.size(); ++m) {
    if (raw[m] > epsilon) {
      g.masked[m] = raw[m];
      ++g.active_count;
    }
  }
  if (g.active_count == 0 && fallback == GateFallback::top1 && !raw.empty()) {
    const auto best = static_cast<std::size_t>(std::max_element(raw.begin(), raw.end()) - raw.begin());
    g.masked[best] = raw[best];
    g.active_count = 1;
  }
  g.raw = std::move(raw);
  return g;
}

GateVector route(const Model& model, BranchLabel branch, std::size_t task,
                 std::span<const double> z) {
  if (z.size() != model.config.d_in()) {
    throw ShapeError("route: z has length " + std::to_string(z.size()) + ", expected d_in=" +
                     std::to_string(model.config.d_in()));
  }
  const Router& r = model.branch(branch).routers.at(model.active_slot(task));
  const auto& tape = model.tape;
  GateVector g = mask_gates(softmax(affine_forward(z, tape.value_matrix(r.w), tape.values(r.b))),
                            model.config.epsilon, model.config.fallback);
  g.task = task;
  g.branch = branch;
  return g;
}

SmeOutput sme_forward(const Model& model, BranchLabel branch, std::size_t task,
                      std::span<const double> z) {
  SmeOutput out;
  out.gate = route(model, branch, task, z);
  const Branch& br = model.branch(branch);
  const Router& r = br.routers[model.active_slot(task)];
  out.fused.assign(model.config.expert_out, 0.0);
  for (std::size_t m = 0; m < r.eligible.size(); ++m) {
    const double w = out.gate.masked[m];
    if (w == 0.0) continue;
    Vector e = expert_forward(model, br.experts[r.eligible[m]], z);
    kernels::active().axpy(w, e.data(), out.fused.data(), e.size());
    out.expert_outputs.emplace_back(r.eligible[m], std::move(e));
  }
  return out;
}

Prediction predict(const Model& model, const RegionRecord& record, bool diagnostics) {
  detail::ForwardCache cache;
  detail::forward_cached(model, record, cache);
  Prediction p;
  p.y = cache.y;
  if (diagnostics) {
    for (std::size_t s = 0; s < model.heads.size(); ++s) {
      p.gates.push_back(cache.branches[0].gates[s]);
      p.gates.push_back(cache.branches[1].gates[s]);
    }
  }
  return p;
}

}  // namespace sme
