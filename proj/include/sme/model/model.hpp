#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "sme/data/dataset.hpp"
#include "sme/model/config.hpp"
#include "sme/numcore/param_tape.hpp"
#include "sme/numcore/rng.hpp"

namespace sme {

struct ExpertKind {
  enum class Type { specific, dual, shared };

  Type type = Type::shared;
  std::size_t task_a = 0;  // specific: owning task; dual: smaller task index
  std::size_t task_b = 0;  // dual: larger task index

  static ExpertKind specific(std::size_t task) { return {Type::specific, task, task}; }
  static ExpertKind dual(std::size_t a, std::size_t b);
  static ExpertKind shared() { return {Type::shared, 0, 0}; }

  bool eligible_for(std::size_t task) const;

  // "specific:carbon", "dual:carbon+population", "shared".
  std::string label(const std::vector<std::string>& task_names) const;

  bool operator==(const ExpertKind&) const = default;
};

// E(z) = sigma(W2 phi(W1 z + b1) + b2)
struct Expert {
  ExpertKind kind;
  ParamTape::SliceId w1, b1, w2, b2;
};

// Linear-softmax gate of one task over its eligible experts.
struct Router {
  std::size_t task = 0;
  std::vector<std::size_t> eligible;  // pool indices, in pool order
  ParamTape::SliceId w, b;
};

enum class BranchLabel { image = 0, text = 1 };
inline constexpr std::array<BranchLabel, 2> kBranches{BranchLabel::image, BranchLabel::text};
std::string_view to_string(BranchLabel b);

struct Branch {
  BranchLabel label = BranchLabel::image;
  std::vector<Expert> experts;
  std::vector<Router> routers;  // one per active task, in active-task order
};

// Two-layer MLP on concat(u_image, u_text); a single linear layer when
// head_hidden is 0 (then w2/b2 are unused).
struct Head {
  std::size_t task = 0;
  bool linear = false;
  ParamTape::SliceId w1, b1, w2, b2;
};

struct GateVector {
  std::size_t task = 0;
  BranchLabel branch = BranchLabel::image;
  Vector raw;     // softmax over the eligible experts
  Vector masked;  // raw where raw > epsilon, else 0
  std::size_t active_count = 0;
};

class Model {
 public:
  ModelConfig config;
  std::size_t n_regions = 0;
  ParamTape tape;

  ParamTape::SliceId region_embedding = 0;  // n_regions x d_r
  ParamTape::SliceId poi_w = 0;              // d_p x C
  ParamTape::SliceId poi_b = 0;              // d_p
  std::array<Branch, 2> branches;
  std::vector<Head> heads;  // one per active task

  const Branch& branch(BranchLabel b) const { return branches[static_cast<std::size_t>(b)]; }

  // Position of a dataset task among the active tasks; throws LookupError.
  std::size_t active_slot(std::size_t task) const;
};

// Canonical pool order per branch: specific experts task by task, dual
// experts pair by pair (lexicographic), shared experts last. Weights are
// Glorot-uniform, biases zero, embeddings N(0, 0.02^2).
Model build_model(const ModelConfig& config, std::size_t n_regions, Rng& rng);

std::vector<std::size_t> eligible_experts(const Model& model, std::size_t task);

struct FusedInput {
  Vector poi_features;  // log1p(counts)
  Vector z_image;
  Vector z_text;

  const Vector& z(BranchLabel b) const { return b == BranchLabel::image ? z_image : z_text; }
};

// z = concat(e, r[region], poi_w * log1p(counts) + poi_b) for each branch.
FusedInput fuse_inputs(const Model& model, const RegionRecord& record);

Vector expert_forward(const Model& model, const Expert& expert, std::span<const double> z);

// Thresholding without renormalisation; top1 fallback keeps the first
// argmax when nothing clears epsilon.
GateVector mask_gates(Vector raw, double epsilon, GateFallback fallback);

GateVector route(const Model& model, BranchLabel branch, std::size_t task,
                 std::span<const double> z);

struct SmeOutput {
  Vector fused;  // u_tilde for the task
  GateVector gate;
  // (pool index, output) for every expert with a nonzero gate, in gate order.
  std::vector<std::pair<std::size_t, Vector>> expert_outputs;
};

// Only experts with a nonzero masked gate are evaluated.
SmeOutput sme_forward(const Model& model, BranchLabel branch, std::size_t task,
                      std::span<const double> z);

struct Prediction {
  Vector y;                      // one entry per active task
  std::vector<GateVector> gates; // filled when diagnostics requested: task-major, image then text
};

Prediction predict(const Model& model, const RegionRecord& record, bool diagnostics = false);

struct LossWeights {
  std::vector<double> lambda;  // one per dataset task

  static LossWeights uniform(std::size_t num_tasks) { return {std::vector<double>(num_tasks, 1.0)}; }
};

// Sum over active tasks of lambda_t * mean_b (yhat - y)^2 over `batch`
// (indices into records / rows of targets), gradients written to the tape
// after zeroing it. targets holds transformed labels, one row per record.
double backward(Model& model, std::span<const RegionRecord> records,
                std::span<const std::size_t> batch, const Matrix& targets,
                const LossWeights& weights);

// Whole-span convenience form.
double backward(Model& model, std::span<const RegionRecord> records, const Matrix& targets,
                const LossWeights& weights);

struct ParameterCounts {
  std::size_t embeddings = 0;
  std::size_t experts = 0;
  std::size_t routers = 0;
  std::size_t heads = 0;
  std::size_t total = 0;
};

ParameterCounts count_parameters(const Model& model);

}  // namespace sme
