#pragma once

#include <cstdint>

#include "sme/data/dataset.hpp"

namespace sme {

struct SyntheticSpec {
  std::size_t regions = 2000;
  std::size_t d_e = 16;
  std::size_t poi_categories = 15;
  std::size_t num_tasks = 3;
  std::size_t latent_dim = 8;
  double noise_std = 0.1;
  std::uint64_t seed = 7;

  void validate() const;
};

// Number of tanh basis functions feeding the nonlinear part of each label.
inline constexpr std::size_t kSyntheticBasis = 4;

struct SyntheticSample {
  Dataset dataset;
  Matrix latents;  // regions x latent_dim
  Matrix basis;    // regions x kSyntheticBasis, tanh(v_k . h)
};

// Latent-factor generator. Per region h ~ N(0, I): the image features see
// the first two thirds of h, the text features the last two thirds, POI
// counts are Poisson with log-rate linear in h, and each label is
// (shared + task-specific direction) . h plus a tanh mixture of h plus
// noise. Labels correlate across tasks through the shared direction. All
// stored values are rounded to float32 so the dataset survives urf1 exactly.
SyntheticSample gen_synthetic_with_latents(const SyntheticSpec& spec);

Dataset gen_synthetic(const SyntheticSpec& spec);

}  // namespace sme
