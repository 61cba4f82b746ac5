#include <chrono>
#include <cmath>
#include <limits>

#include "sme/error.hpp"
#include "sme/train/train.hpp"

namespace sme {

LossWeights TrainConfig::loss_weights(std::size_t num_tasks) const {
  if (lambda.empty()) return LossWeights::uniform(num_tasks);
  return LossWeights{lambda};
}

void TrainConfig::validate(std::size_t num_tasks) const {
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam.eps > 0.0)) throw ConfigError("Adam eps must be > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
  if (patience > max_epochs) throw ConfigError("patience must not exceed max_epochs");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (!lambda.empty()) {
    if (lambda.size() != num_tasks) {
      throw ConfigError("lambda lists " + std::to_string(lambda.size()) + " weights for " +
                        std::to_string(num_tasks) + " tasks");
    }
    bool any_positive = false;
    for (double l : lambda) {
      if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambda entries must be finite and >= 0");
      any_positive |= l > 0.0;
    }
    if (!any_positive) throw ConfigError("at least one lambda must be > 0");
  }
}

std::uint64_t shuffle_seed_for(std::uint64_t run_seed) { return run_seed ^ 0x5eed5eed5eed5eedULL; }

namespace {

void check_compatible(const Model& model, const Dataset& dataset) {
  const auto& c = model.config;
  const auto& m = dataset.manifest;
  if (c.d_e != m.d_e || c.poi_categories != m.poi_categories || c.num_tasks() != m.num_tasks) {
    throw ConfigError("model expects d_e=" + std::to_string(c.d_e) + ", C=" +
                      std::to_string(c.poi_categories) + ", T=" + std::to_string(c.num_tasks()) +
                      " but dataset has d_e=" + std::to_string(m.d_e) + ", C=" +
                      std::to_string(m.poi_categories) + ", T=" + std::to_string(m.num_tasks));
  }
  if (model.n_regions < dataset.region_capacity()) {
    throw ConfigError("model covers " + std::to_string(model.n_regions) +
                      " regions but dataset needs " + std::to_string(dataset.region_capacity()));
  }
}

}  // namespace

TrainResult train(Model model, const Dataset& dataset, const SplitAssignment& split,
                  const TargetTransform& transform, const TrainConfig& config,
                  std::uint64_t shuffle_seed) {
  const auto start = std::chrono::steady_clock::now();
  config.validate(dataset.manifest.num_tasks);
  check_compatible(model, dataset);
  if (split.train.empty()) throw ArgumentError("train: empty training split");

  const Matrix targets = transform.apply_all(dataset);
  const LossWeights weights = config.loss_weights(dataset.manifest.num_tasks);
  Rng shuffle_rng(shuffle_seed);
  AdamState adam;

  TrainResult result{{}, model};
  RunHistory& hist = result.history;
  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<std::size_t> order = split.train;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t seen = 0;
    bool step_cap = false;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + begin, end - begin);
      double loss = 0.0;
      try {
        loss = backward(model, dataset.records, batch, targets, weights);
        adam_step(model.tape, adam, config.adam);
      } catch (const NumericError& e) {
        throw NumericError("diverged at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(hist.steps + 1) + ": " + e.what());
      }
      loss_sum += loss * static_cast<double>(batch.size());
      seen += batch.size();
      ++hist.steps;
      if (config.record_step_losses) hist.step_losses.push_back(loss);
      if (config.max_steps && hist.steps >= config.max_steps) {
        step_cap = true;
        break;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    double score = -std::numeric_limits<double>::infinity();
    if (!split.val.empty()) {
      rec.val = evaluate(model, dataset, split.val, transform, config.metrics_in_original_space);
      if (rec.val->avg_r2) score = *rec.val->avg_r2;
    }
    hist.epochs.push_back(std::move(rec));

    // Without a validation split the latest epoch is kept.
    if (hist.best_epoch == 0 || score > best_score || split.val.empty()) {
      best_score = score;
      hist.best_epoch = epoch;
      result.best_model = model;
      since_best = 0;
    } else if (++since_best >= config.patience && config.patience > 0) {
      hist.early_stopped = true;
      break;
    }
    if (step_cap) break;
  }

  hist.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace sme
