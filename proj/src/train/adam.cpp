#include <cmath>

#include "sme/error.hpp"
#include "sme/train/train.hpp"

namespace sme {

void adam_step(ParamTape& tape, AdamState& state, const AdamConfig& config) {
  auto values = tape.all_values();
  auto grads = tape.all_grads();
  if (state.m.size() != values.size()) {
    state.m.assign(values.size(), 0.0);
    state.v.assign(values.size(), 0.0);
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("adam_step: non-finite gradient in '" + tape.slice_containing(i).name + "'");
    }
  }

  const std::uint64_t t = ++state.step;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double g = grads[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    values[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

}  // namespace sme
