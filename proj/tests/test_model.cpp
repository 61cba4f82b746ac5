#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "sme/data/synthetic.hpp"
#include "sme/error.hpp"
#include "sme/model/model.hpp"
#include "sme/train/gradcheck.hpp"

using namespace sme;

namespace {

ModelConfig default_config() { return ModelConfig{}; }

void set(Model& m, ParamTape::SliceId id, std::initializer_list<double> values) {
  auto dst = m.tape.values(id);
  ASSERT_EQ(dst.size(), values.size()) << m.tape.slice(id).name;
  std::copy(values.begin(), values.end(), dst.begin());
}

void fill(Model& m, ParamTape::SliceId id, double v) {
  for (double& x : m.tape.values(id)) x = v;
}

// One task, identity output, d_in = 1; experts output their b2 when W2 = 0.
Model constant_expert_model(std::size_t n_experts, std::size_t d_u, double epsilon, GateFallback fb) {
  ModelConfig c;
  c.d_e = 1;
  c.d_r = 0;
  c.d_p = 0;
  c.poi_categories = 1;
  c.task_names = {"carbon"};
  c.n_specific = n_experts;
  c.n_dual = 0;
  c.n_shared = 0;
  c.expert_hidden = 1;
  c.expert_out = d_u;
  c.head_hidden = 0;
  c.sigma = SigmaKind::identity;
  c.epsilon = epsilon;
  c.fallback = fb;
  Rng rng(1);
  Model m = build_model(c, 1, rng);
  for (const auto& e : m.branch(BranchLabel::image).experts) fill(m, e.w2, 0.0);
  fill(m, m.branch(BranchLabel::image).routers[0].w, 0.0);
  return m;
}

RegionRecord record_for(const ModelConfig& c, std::uint32_t id, double feat) {
  RegionRecord r;
  r.region_id = id;
  r.image_feat.assign(c.d_e, feat);
  r.text_feat.assign(c.d_e, feat);
  r.poi_counts.assign(c.poi_categories, 1.0);
  r.labels.assign(c.num_tasks(), 0.0);
  return r;
}

Dataset synthetic(std::size_t regions, std::uint64_t seed = 7) {
  SyntheticSpec s;
  s.regions = regions;
  s.seed = seed;
  return gen_synthetic(s);
}

Matrix raw_targets(const Dataset& ds) {
  Matrix t(ds.size(), ds.manifest.num_tasks);
  for (std::size_t k = 0; k < ds.size(); ++k) {
    for (std::size_t j = 0; j < t.cols(); ++j) t(k, j) = ds.records[k].labels[j];
  }
  return t;
}

}  // namespace

TEST(Config, ExpertCountArithmetic) {
  const ModelConfig c = default_config();
  EXPECT_EQ(c.experts_per_branch(), 34u);
  EXPECT_EQ(c.eligible_per_task(), 16u);
  EXPECT_EQ(c.d_in(), 16u + 6u + 15u);
  ModelConfig st = c;
  st.mode = parse_task_mode("st:population", c.task_names);
  st.n_specific = 16;
  st.n_dual = 0;
  st.n_shared = 0;
  EXPECT_EQ(st.experts_per_branch(), 16u);
  EXPECT_EQ(st.active_tasks(), std::vector<std::size_t>{1});
}

TEST(Config, ValidationErrors) {
  ModelConfig c;
  c.epsilon = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.n_specific = c.n_dual = c.n_shared = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.task_names = {"a", "a"};
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(parse_task_mode("st:rain", ModelConfig{}.task_names), ConfigError);
  EXPECT_THROW(parse_sigma("batch_norm"), ConfigError);
}

TEST(Build, DefaultPoolStructure) {
  Rng rng(1);
  const Model m = build_model(default_config(), 10, rng);
  for (BranchLabel b : kBranches) {
    const Branch& br = m.branch(b);
    ASSERT_EQ(br.experts.size(), 34u);
    ASSERT_EQ(br.routers.size(), 3u);
    for (std::size_t i = 0; i < 24; ++i) {
      EXPECT_EQ(br.experts[i].kind, ExpertKind::specific(i / 8));
    }
    EXPECT_EQ(br.experts[24].kind, ExpertKind::dual(0, 1));
    EXPECT_EQ(br.experts[26].kind, ExpertKind::dual(0, 2));
    EXPECT_EQ(br.experts[28].kind, ExpertKind::dual(1, 2));
    for (std::size_t i = 30; i < 34; ++i) EXPECT_EQ(br.experts[i].kind, ExpertKind::shared());
    for (const Router& r : br.routers) {
      EXPECT_EQ(r.eligible.size(), 16u);
      EXPECT_EQ(m.tape.slice(r.w).rows, 16u);
    }
  }
  EXPECT_EQ(m.heads.size(), 3u);
  EXPECT_EQ(ExpertKind::dual(2, 0), ExpertKind::dual(0, 2));
  EXPECT_EQ(m.branch(BranchLabel::text).experts[25].kind.label(m.config.task_names), "dual:carbon+population");
}

TEST(Build, BranchesAreStructurallyIdentical) {
  Rng rng(2);
  const Model m = build_model(default_config(), 4, rng);
  const Branch& a = m.branch(BranchLabel::image);
  const Branch& b = m.branch(BranchLabel::text);
  for (std::size_t i = 0; i < a.experts.size(); ++i) {
    EXPECT_EQ(a.experts[i].kind, b.experts[i].kind);
    EXPECT_EQ(m.tape.slice(a.experts[i].w1).rows, m.tape.slice(b.experts[i].w1).rows);
    EXPECT_EQ(m.tape.slice(a.experts[i].w2).cols, m.tape.slice(b.experts[i].w2).cols);
  }
}

TEST(Build, SameSeedSameParameters) {
  Rng r1(5), r2(5), r3(6);
  const Model a = build_model(default_config(), 8, r1);
  const Model b = build_model(default_config(), 8, r2);
  const Model c = build_model(default_config(), 8, r3);
  EXPECT_TRUE(std::ranges::equal(a.tape.all_values(), b.tape.all_values()));
  EXPECT_FALSE(std::ranges::equal(a.tape.all_values(), c.tape.all_values()));
}

TEST(Build, InitialisationScales) {
  Rng rng(3);
  const Model m = build_model(default_config(), 500, rng);
  for (double v : m.tape.values(m.branch(BranchLabel::image).experts[0].b1)) EXPECT_EQ(v, 0.0);
  const auto w1 = m.tape.values(m.branch(BranchLabel::image).experts[0].w1);
  const double limit = std::sqrt(6.0 / (64.0 + 37.0));
  for (double v : w1) EXPECT_LE(std::abs(v), limit);
  double sq = 0.0;
  const auto emb = m.tape.values(m.region_embedding);
  for (double v : emb) sq += v * v;
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(emb.size())), 0.02, 0.002);
}

TEST(Eligible, DefaultAndSingleTask) {
  Rng rng(1);
  const Model m = build_model(default_config(), 2, rng);
  const auto carbon = eligible_experts(m, 0);
  ASSERT_EQ(carbon.size(), 16u);
  std::vector<std::size_t> expected;
  for (std::size_t i = 0; i < 8; ++i) expected.push_back(i);
  for (std::size_t i : {24, 25, 26, 27, 30, 31, 32, 33}) expected.push_back(i);
  EXPECT_EQ(carbon, expected);
  EXPECT_THROW(eligible_experts(m, 7), LookupError);

  ModelConfig st = default_config();
  st.mode = TaskMode{true, 2};
  st.n_specific = 16;
  st.n_dual = 0;
  st.n_shared = 0;
  Rng rng2(1);
  const Model s = build_model(st, 2, rng2);
  EXPECT_EQ(eligible_experts(s, 2).size(), 16u);
  EXPECT_EQ(s.heads.size(), 1u);
  EXPECT_THROW(eligible_experts(s, 0), LookupError);

  ModelConfig nd = default_config();
  nd.n_dual = 0;
  Rng rng3(1);
  const Model n = build_model(nd, 2, rng3);
  for (std::size_t e : eligible_experts(n, 1)) {
    const auto& k = n.branch(BranchLabel::image).experts[e].kind;
    EXPECT_TRUE(k == ExpertKind::specific(1) || k == ExpertKind::shared());
  }
}

TEST(Fuse, ConcatenationExample) {
  ModelConfig c;
  c.d_e = 2;
  c.d_r = 1;
  c.d_p = 1;
  c.poi_categories = 2;
  Rng rng(1);
  Model m = build_model(c, 3, rng);
  set(m, m.region_embedding, {0.9, 0.5, 0.1});
  fill(m, m.poi_w, 0.0);
  set(m, m.poi_b, {0.3});
  RegionRecord r{1, {0.1, 0.2}, {0.1, 0.2}, {4.0, 0.0}, {0, 0, 0}};
  const FusedInput z = fuse_inputs(m, r);
  EXPECT_EQ(z.z_image, (Vector{0.1, 0.2, 0.5, 0.3}));
  EXPECT_EQ(z.z_image, z.z_text);

  fill(m, m.poi_b, 0.0);
  set(m, m.poi_w, {1.0, 1.0});
  r.poi_counts = {0.0, 0.0};
  EXPECT_EQ(fuse_inputs(m, r).z_image[3], 0.0);
  r.poi_counts = {std::exp(1.0) - 1.0, 0.0};
  EXPECT_NEAR(fuse_inputs(m, r).poi_features[0], 1.0, 1e-15);

  r.region_id = 3;
  EXPECT_THROW(fuse_inputs(m, r), LookupError);
  r.region_id = 0;
  r.text_feat = {1.0};
  EXPECT_THROW(fuse_inputs(m, r), ShapeError);
}

TEST(Fuse, AblationToggles) {
  ModelConfig c = default_config();
  c.d_r = 0;
  c.d_p = 0;
  Rng rng(1);
  const Model m = build_model(c, 2, rng);
  const RegionRecord r = record_for(c, 1, 0.5);
  EXPECT_EQ(fuse_inputs(m, r).z_image.size(), 16u);
}

TEST(Expert, HandComputed) {
  Model m = constant_expert_model(1, 1, 0.01, GateFallback::top1);
  const Expert& e = m.branch(BranchLabel::image).experts[0];
  set(m, e.w1, {2.0});
  set(m, e.b1, {0.5});
  set(m, e.w2, {1.0});
  set(m, e.b2, {-0.25});
  EXPECT_EQ(expert_forward(m, e, Vector{1.0}), Vector{2.25});
  EXPECT_THROW(expert_forward(m, e, Vector{1.0, 2.0}), ShapeError);
}

TEST(Expert, IdentityComposition) {
  ModelConfig c;
  c.d_e = 1;
  c.d_r = 1;
  c.d_p = 1;
  c.poi_categories = 1;
  c.task_names = {"carbon"};
  c.n_specific = 1;
  c.n_dual = c.n_shared = 0;
  c.expert_hidden = 3;
  c.expert_out = 3;
  c.sigma = SigmaKind::identity;
  Rng rng(1);
  Model m = build_model(c, 1, rng);
  const Expert& e = m.branch(BranchLabel::text).experts[0];
  set(m, e.w1, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  set(m, e.w2, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  EXPECT_EQ(expert_forward(m, e, Vector{0.5, 0.0, 2.0}), (Vector{0.5, 0.0, 2.0}));
}

TEST(Expert, LayerNormOutputIsStandardised) {
  Rng rng(1);
  const Model m = build_model(default_config(), 2, rng);
  Vector z(37);
  for (double& v : z) v = rng.normal();
  const Vector y = expert_forward(m, m.branch(BranchLabel::image).experts[5], z);
  double mean = 0.0, var = 0.0;
  for (double v : y) mean += v;
  mean /= 32.0;
  for (double v : y) var += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(var / 32.0, 1.0, 1e-3);
}

TEST(Gates, ThresholdExamples) {
  GateVector g = mask_gates(Vector{0.97, 0.02, 0.005, 0.005}, 0.01, GateFallback::top1);
  EXPECT_EQ(g.masked, (Vector{0.97, 0.02, 0.0, 0.0}));
  EXPECT_EQ(g.active_count, 2u);

  g = mask_gates(Vector{0.25, 0.25, 0.25, 0.25}, 0.0, GateFallback::top1);
  EXPECT_EQ(g.masked, g.raw);
  EXPECT_EQ(g.active_count, 4u);

  // Strict inequality: a gate equal to epsilon is dropped.
  g = mask_gates(Vector{0.5, 0.3, 0.2}, 0.2, GateFallback::literal);
  EXPECT_EQ(g.masked, (Vector{0.5, 0.3, 0.0}));
}

TEST(Gates, Fallbacks) {
  GateVector top = mask_gates(Vector{0.3, 0.4, 0.3}, 0.5, GateFallback::top1);
  EXPECT_EQ(top.masked, (Vector{0.0, 0.4, 0.0}));
  EXPECT_EQ(top.active_count, 1u);
  GateVector tie = mask_gates(Vector{0.5, 0.5}, 0.6, GateFallback::top1);
  EXPECT_EQ(tie.masked, (Vector{0.5, 0.0}));
  GateVector lit = mask_gates(Vector{0.5, 0.5}, 0.6, GateFallback::literal);
  EXPECT_EQ(lit.masked, (Vector{0.0, 0.0}));
  EXPECT_EQ(lit.active_count, 0u);
}

TEST(Route, ZeroLogitsAreUniform) {
  Rng rng(1);
  Model m = build_model(default_config(), 2, rng);
  const Router& r = m.branch(BranchLabel::image).routers[1];
  fill(m, r.w, 0.0);
  fill(m, r.b, 0.0);
  Vector z(37, 0.3);
  const GateVector g = route(m, BranchLabel::image, 1, z);
  ASSERT_EQ(g.raw.size(), 16u);
  for (double v : g.raw) EXPECT_DOUBLE_EQ(v, 0.0625);
  EXPECT_EQ(g.active_count, 16u);
}

TEST(SmeForward, ZeroGatesExcluded) {
  Model m = constant_expert_model(4, 2, 0.01, GateFallback::top1);
  auto& br = m.branches[0];
  const std::vector<Vector> outs{{1, 0}, {0, 1}, {5, 5}, {9, 9}};
  for (std::size_t i = 0; i < 4; ++i) std::ranges::copy(outs[i], m.tape.values(br.experts[i].b2).begin());
  set(m, br.routers[0].b, {std::log(0.7), std::log(0.3), -1000.0, -1000.0});
  const SmeOutput out = sme_forward(m, BranchLabel::image, 0, Vector{0.4});
  EXPECT_NEAR(out.fused[0], 0.7, 1e-12);
  EXPECT_NEAR(out.fused[1], 0.3, 1e-12);
  EXPECT_EQ(out.gate.active_count, 2u);
  // Only retained experts are evaluated.
  ASSERT_EQ(out.expert_outputs.size(), 2u);
  EXPECT_EQ(out.expert_outputs[0].first, 0u);
  EXPECT_EQ(out.expert_outputs[1].first, 1u);
}

TEST(SmeForward, HandMixture) {
  Model m = constant_expert_model(2, 2, 0.01, GateFallback::top1);
  auto& br = m.branches[0];
  set(m, br.experts[0].b2, {1, 2});
  set(m, br.experts[1].b2, {3, 4});
  set(m, br.routers[0].b, {std::log(0.6), std::log(0.4)});
  const SmeOutput out = sme_forward(m, BranchLabel::image, 0, Vector{0.0});
  EXPECT_NEAR(out.fused[0], 1.8, 1e-12);
  EXPECT_NEAR(out.fused[1], 2.8, 1e-12);
}

TEST(SmeForward, LiteralFallbackGivesZero) {
  Model m = constant_expert_model(3, 2, 0.9, GateFallback::literal);
  for (const auto& e : m.branches[0].experts) fill(m, e.b2, 4.0);
  const SmeOutput out = sme_forward(m, BranchLabel::image, 0, Vector{1.0});
  EXPECT_EQ(out.fused, (Vector{0.0, 0.0}));
  EXPECT_TRUE(out.expert_outputs.empty());
}

TEST(Predict, HandComposedMicroModel) {
  ModelConfig c;
  c.d_e = 1;
  c.d_r = 1;
  c.d_p = 1;
  c.poi_categories = 1;
  c.task_names = {"carbon"};
  c.n_specific = 1;
  c.n_dual = c.n_shared = 0;
  c.expert_hidden = 1;
  c.expert_out = 1;
  c.head_hidden = 0;
  c.sigma = SigmaKind::identity;
  c.activation = Activation::relu;
  Rng rng(1);
  Model m = build_model(c, 1, rng);
  set(m, m.region_embedding, {0.2});
  fill(m, m.poi_w, 0.0);
  set(m, m.poi_b, {0.2});
  for (auto& br : m.branches) {
    set(m, br.experts[0].w1, {1, 1, 1});
    set(m, br.experts[0].w2, {1});
  }
  set(m, m.heads[0].w1, {1, 1});
  set(m, m.heads[0].b1, {0});
  const RegionRecord r{0, {0.2}, {0.2}, {3.0}, {0.0}};
  const Prediction p = predict(m, r, true);
  ASSERT_EQ(p.y.size(), 1u);
  EXPECT_NEAR(p.y[0], 1.2, 1e-15);
  ASSERT_EQ(p.gates.size(), 2u);
  EXPECT_EQ(p.gates[0].branch, BranchLabel::image);
  EXPECT_EQ(p.gates[1].branch, BranchLabel::text);
  EXPECT_EQ(predict(m, r).y, p.y);
}

TEST(Predict, OneOutputPerTaskInOrder) {
  const Dataset ds = synthetic(5);
  Rng rng(4);
  const Model m = build_model(default_config(), ds.region_capacity(), rng);
  const Prediction p = predict(m, ds.records[2], true);
  EXPECT_EQ(p.y.size(), 3u);
  ASSERT_EQ(p.gates.size(), 6u);
  for (std::size_t g = 0; g < 6; ++g) EXPECT_EQ(p.gates[g].task, g / 2);
}

TEST(Invariants, GateNormalisationAndThreshold) {
  const Dataset ds = synthetic(200, 11);
  ModelConfig c = default_config();
  c.epsilon = 0.05;
  Rng rng(9);
  const Model m = build_model(c, ds.region_capacity(), rng);
  for (const auto& r : ds.records) {
    for (const GateVector& g : predict(m, r, true).gates) {
      double sum = 0.0;
      std::size_t active = 0;
      for (std::size_t i = 0; i < g.raw.size(); ++i) {
        sum += g.raw[i];
        EXPECT_GT(g.raw[i], 0.0);
        EXPECT_LT(g.raw[i], 1.0);
        if (g.masked[i] != 0.0) {
          ++active;
          EXPECT_EQ(g.masked[i], g.raw[i]);
          if (g.active_count > 1) {
            EXPECT_GT(g.masked[i], c.epsilon);
          }
        }
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
      EXPECT_EQ(active, g.active_count);
      EXPECT_LE(g.active_count, 16u);
    }
  }
}

TEST(Invariants, ConvexCombinationAtZeroEpsilon) {
  const Dataset ds = synthetic(50, 12);
  ModelConfig c = default_config();
  c.epsilon = 0.0;
  Rng rng(10);
  const Model m = build_model(c, ds.region_capacity(), rng);
  for (const auto& r : ds.records) {
    const FusedInput z = fuse_inputs(m, r);
    for (BranchLabel b : kBranches) {
      for (std::size_t task = 0; task < 3; ++task) {
        const SmeOutput out = sme_forward(m, b, task, z.z(b));
        ASSERT_EQ(out.gate.active_count, 16u);
        for (std::size_t d = 0; d < out.fused.size(); ++d) {
          double lo = INFINITY, hi = -INFINITY;
          for (std::size_t e : eligible_experts(m, task)) {
            const double v = expert_forward(m, m.branch(b).experts[e], z.z(b))[d];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
          EXPECT_GE(out.fused[d], lo - 1e-12);
          EXPECT_LE(out.fused[d], hi + 1e-12);
        }
      }
    }
  }
}

TEST(Invariants, MixtureIsHomogeneousInExpertScale) {
  const Dataset ds = synthetic(3, 13);
  ModelConfig c = default_config();
  c.sigma = SigmaKind::identity;
  Rng rng(11);
  Model m = build_model(c, ds.region_capacity(), rng);
  for (const auto& e : m.branch(BranchLabel::text).experts) {
    for (double& v : m.tape.values(e.b2)) v = 0.1;
  }
  const Vector z = fuse_inputs(m, ds.records[0]).z_text;
  const SmeOutput base = sme_forward(m, BranchLabel::text, 2, z);
  for (const auto& e : m.branch(BranchLabel::text).experts) {
    for (auto id : {e.w2, e.b2}) {
      for (double& v : m.tape.values(id)) v *= -2.5;
    }
  }
  const SmeOutput scaled = sme_forward(m, BranchLabel::text, 2, z);
  EXPECT_EQ(scaled.gate.masked, base.gate.masked);
  for (std::size_t d = 0; d < base.fused.size(); ++d) EXPECT_NEAR(scaled.fused[d], -2.5 * base.fused[d], 1e-12);
}

TEST(Backward, PerfectFitHasZeroLossAndGradient) {
  const Dataset ds = synthetic(6);
  Rng rng(2);
  Model m = build_model(default_config(), ds.region_capacity(), rng);
  Matrix targets(ds.size(), 3);
  for (std::size_t k = 0; k < ds.size(); ++k) {
    const Vector y = predict(m, ds.records[k]).y;
    for (std::size_t t = 0; t < 3; ++t) targets(k, t) = y[t];
  }
  EXPECT_EQ(backward(m, ds.records, targets, LossWeights::uniform(3)), 0.0);
  for (double g : m.tape.all_grads()) ASSERT_EQ(g, 0.0);
}

TEST(Backward, LinearInLambda) {
  const Dataset ds = synthetic(8);
  Rng rng(3);
  Model m = build_model(default_config(), ds.region_capacity(), rng);
  const Matrix targets = raw_targets(ds);
  const LossWeights w{{0.5, 1.5, 2.0}};
  const double l1 = backward(m, ds.records, targets, w);
  const std::vector<double> g1(m.tape.all_grads().begin(), m.tape.all_grads().end());
  const double l2 = backward(m, ds.records, targets, LossWeights{{1.0, 3.0, 4.0}});
  EXPECT_NEAR(l2, 2.0 * l1, 1e-12 * l2);
  const auto g2 = m.tape.all_grads();
  for (std::size_t i = 0; i < g1.size(); ++i) ASSERT_NEAR(g2[i], 2.0 * g1[i], 1e-12 * std::max(1.0, std::abs(g2[i])));
}

TEST(Backward, GradientIsolation) {
  const Dataset ds = synthetic(10);
  Rng rng(4);
  Model m = build_model(default_config(), ds.region_capacity(), rng);
  backward(m, ds.records, raw_targets(ds), LossWeights{{1.0, 0.0, 0.0}});
  for (BranchLabel b : kBranches) {
    double reachable_norm = 0.0;
    for (const Expert& e : m.branch(b).experts) {
      double norm = 0.0;
      for (auto id : {e.w1, e.b1, e.w2, e.b2}) {
        for (double g : m.tape.grads(id)) norm += std::abs(g);
      }
      if (e.kind.eligible_for(0)) {
        reachable_norm += norm;
      } else {
        EXPECT_EQ(norm, 0.0) << e.kind.label(m.config.task_names);
      }
    }
    EXPECT_GT(reachable_norm, 0.0);
    for (std::size_t s = 1; s < 3; ++s) {
      for (double g : m.tape.grads(m.branch(b).routers[s].w)) ASSERT_EQ(g, 0.0);
    }
  }
  for (double g : m.tape.grads(m.heads[1].w1)) ASSERT_EQ(g, 0.0);
}

TEST(Backward, ThresholdIsAGradientStop) {
  // With a huge epsilon only the top-1 expert survives, so the other
  // eligible experts get no gradient at all.
  const Dataset ds = synthetic(1);
  ModelConfig c = default_config();
  c.epsilon = 0.9;
  Rng rng(5);
  Model m = build_model(c, ds.region_capacity(), rng);
  backward(m, ds.records, raw_targets(ds), LossWeights{{1.0, 0.0, 0.0}});
  const Prediction p = predict(m, ds.records[0], true);
  const GateVector& g = p.gates[0];
  ASSERT_EQ(g.active_count, 1u);
  const Router& r = m.branch(BranchLabel::image).routers[0];
  for (std::size_t j = 0; j < r.eligible.size(); ++j) {
    const Expert& e = m.branch(BranchLabel::image).experts[r.eligible[j]];
    double norm = 0.0;
    for (double x : m.tape.grads(e.w2)) norm += std::abs(x);
    if (g.masked[j] == 0.0) {
      EXPECT_EQ(norm, 0.0);
    } else {
      EXPECT_GT(norm, 0.0);
    }
  }
}

TEST(Backward, Errors) {
  const Dataset ds = synthetic(3);
  Rng rng(6);
  Model m = build_model(default_config(), ds.region_capacity(), rng);
  const Matrix t = raw_targets(ds);
  EXPECT_THROW(backward(m, ds.records, std::span<const std::size_t>{}, t, LossWeights::uniform(3)), ArgumentError);
  Matrix bad = t;
  bad(1, 1) = std::nan("");
  EXPECT_THROW(backward(m, ds.records, bad, LossWeights::uniform(3)), NumericError);
  EXPECT_THROW(backward(m, ds.records, t, LossWeights::uniform(2)), ArgumentError);
}

TEST(Backward, MatchesFiniteDifferencesOnMicroModel) {
  MicroProblem p = make_micro_problem(3);
  const GradCheckReport r = check_model_gradients(p);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_slice;
}

TEST(Parameters, SingleExpertCount) {
  ModelConfig c;
  c.d_e = 1;
  c.d_r = 1;
  c.d_p = 1;
  c.poi_categories = 1;
  c.task_names = {"carbon"};
  c.n_specific = 1;
  c.n_dual = c.n_shared = 0;
  c.expert_hidden = 2;
  c.expert_out = 1;
  c.sigma = SigmaKind::identity;
  Rng rng(1);
  const Model m = build_model(c, 1, rng);
  const ParameterCounts pc = count_parameters(m);
  EXPECT_EQ(pc.experts, 2u * (2 * 3 + 2 + 1 * 2 + 1));
  EXPECT_EQ(pc.total, m.tape.size());
  EXPECT_EQ(pc.embeddings + pc.experts + pc.routers + pc.heads, pc.total);
}

TEST(Parameters, LinearGrowthInSpecificExperts) {
  const ModelConfig a = default_config();
  ModelConfig b = a;
  b.n_specific += 1;
  Rng r1(1), r2(1);
  const std::size_t ta = count_parameters(build_model(a, 4, r1)).total;
  const std::size_t tb = count_parameters(build_model(b, 4, r2)).total;
  const std::size_t d_in = a.d_in();
  const std::size_t per_expert = a.expert_hidden * d_in + a.expert_hidden + a.expert_out * a.expert_hidden + a.expert_out;
  const std::size_t router_rows = 3 * (d_in + 1);
  EXPECT_EQ(tb - ta, 2 * (3 * per_expert + router_rows));
}
