#pragma once

#include <cstdint>

#include "sme/numcore/grad_check.hpp"
#include "sme/train/train.hpp"

namespace sme {

// Smooth micro-model for finite-difference checks: tanh experts without
// output normalisation, d_e = 4, d_r = 2, d_p = 2, one expert of each kind,
// hidden width 8, expert output 4, epsilon 0 so every gate stays open.
struct MicroProblem {
  Dataset dataset;
  Model model;
  Matrix targets;
  LossWeights weights;
};

MicroProblem make_micro_problem(std::uint64_t seed);

// Full-model check of the multi-task loss over every record of the problem.
// corrupt_gradient perturbs one analytic gradient entry (negative control).
GradCheckReport check_model_gradients(MicroProblem& problem, double h = 1e-5, bool corrupt_gradient = false);

}  // namespace sme
