#include "sme/numcore/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sme/error.hpp"

namespace sme {

std::vector<std::pair<std::string, double>> GradCheckReport::by_group() const {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& s : slices) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == s.group; });
    if (it == out.end()) {
      out.emplace_back(s.group, s.max_rel_error);
    } else {
      it->second = std::max(it->second, s.max_rel_error);
    }
  }
  return out;
}

GradCheckReport grad_check(ParamTape& tape, const Objective& f, double h) {
  if (!(h > 0.0)) throw ArgumentError("grad_check: step h must be positive");

  const double f0 = f(tape, true);
  if (!std::isfinite(f0)) throw NumericError("grad_check: objective is non-finite at the base point");
  const std::vector<double> analytic(tape.all_grads().begin(), tape.all_grads().end());

  GradCheckReport report;
  report.slices.reserve(tape.slices().size());
  for (const auto& s : tape.slices()) report.slices.push_back({s.name, s.group, 0.0});

  auto values = tape.all_values();
  std::size_t slice_idx = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    while (i >= tape.slices()[slice_idx].offset + tape.slices()[slice_idx].size()) ++slice_idx;
    const double orig = values[i];
    values[i] = orig + h;
    const double fp = f(tape, false);
    values[i] = orig - h;
    const double fm = f(tape, false);
    values[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("grad_check: objective is non-finite when probing '" +
                         tape.slices()[slice_idx].name + "'");
    }
    const double numeric = (fp - fm) / (2.0 * h);
    const double a = analytic[i];
    const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
    auto& se = report.slices[slice_idx];
    se.max_rel_error = std::max(se.max_rel_error, err);
    if (err > report.max_rel_error || (i == 0 && report.worst_slice.empty())) {
      report.max_rel_error = err;
      report.worst_slice = tape.slices()[slice_idx].name;
      report.worst_index = i;
    }
  }
  std::copy(analytic.begin(), analytic.end(), tape.all_grads().begin());
  return report;
}

}  // namespace sme
