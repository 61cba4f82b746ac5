#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sme/numcore/param_tape.hpp"

namespace sme {

// Scalar objective over the tape's current values. When compute_grad is
// true it must zero and then fill the tape's gradient buffer.
using Objective = std::function<double(ParamTape& tape, bool compute_grad)>;

struct SliceError {
  std::string name;
  std::string group;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_slice;
  std::size_t worst_index = 0;
  std::vector<SliceError> slices;

  // Max error per distinct slice group, in first-seen order.
  std::vector<std::pair<std::string, double>> by_group() const;
};

// Central differences on every tape coordinate. The per-coordinate error is
// |analytic - numeric| / max(1, |analytic|, |numeric|). Values are restored
// before returning. Throws NumericError naming the slice when the objective
// is non-finite at any probe.
GradCheckReport grad_check(ParamTape& tape, const Objective& f, double h);

}  // namespace sme
