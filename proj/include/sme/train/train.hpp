#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sme/data/split.hpp"
#include "sme/data/transform.hpp"
#include "sme/metrics/metrics.hpp"
#include "sme/model/model.hpp"

namespace sme {

// sum_t lambda_t * (1/B) sum_b (pred(b,t) - target(b,t))^2 over B x T matrices.
double multi_task_loss(const Matrix& predictions, const Matrix& targets, const LossWeights& weights);

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;  // number of updates applied so far
};

// Advances state.step to t = step + 1 and applies the bias-corrected update
// in place. Throws NumericError naming the slice on a non-finite gradient.
void adam_step(ParamTape& tape, AdamState& state, const AdamConfig& config);

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<double> lambda;  // empty = 1 for every task
  // Hard cap on optimiser steps; 0 = none.
  std::size_t max_steps = 0;
  bool record_step_losses = false;
  // Report metrics on labels mapped back through the inverse transform.
  bool metrics_in_original_space = false;

  LossWeights loss_weights(std::size_t num_tasks) const;
  void validate(std::size_t num_tasks) const;

  bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<TaskMetrics> val;  // absent when the validation split is empty
};

struct RunHistory {
  std::vector<EpochRecord> epochs;
  std::vector<double> step_losses;
  std::size_t best_epoch = 0;
  std::size_t steps = 0;
  bool early_stopped = false;
  double wall_seconds = 0.0;
};

struct TrainResult {
  RunHistory history;
  Model best_model;
};

// Shuffle stream for a run seed; the model init stream is Rng(seed).
std::uint64_t shuffle_seed_for(std::uint64_t run_seed);

// Epoch loop with per-epoch seeded shuffling, Adam updates, and early
// stopping on validation average R2. Returns the best-epoch snapshot.
TrainResult train(Model model, const Dataset& dataset, const SplitAssignment& split,
                  const TargetTransform& transform, const TrainConfig& config,
                  std::uint64_t shuffle_seed);

Matrix predict_all(const Model& model, const Dataset& dataset, std::span<const std::size_t> indices);

// Metrics for the model's active tasks on the given rows, in transformed
// target space unless original_space.
TaskMetrics evaluate(const Model& model, const Dataset& dataset, std::span<const std::size_t> indices,
                     const TargetTransform& transform, bool original_space = false);

// Mean number of retained experts per active task, averaged over both
// branches and the given rows.
std::vector<double> mean_active_counts(const Model& model, const Dataset& dataset,
                                       std::span<const std::size_t> indices);

}  // namespace sme
