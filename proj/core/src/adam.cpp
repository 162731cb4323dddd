#include "batdiff/adam.hpp"

#include <cmath>

#include "batdiff/error.hpp"

namespace batdiff {

AdamState AdamState::for_params(const ParamSet& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, const AdamHyper& hp) {
  if (!(hp.lr > 0.0)) throw ArgumentError("Adam learning rate must be > 0");
  if (!params.same_layout(grads) || !params.same_layout(state.first_moment) ||
      !params.same_layout(state.second_moment)) {
    throw ShapeError("Adam: parameter, gradient and state layouts differ");
  }
  for (const auto& t : grads.tensors()) {
    for (std::size_t k = 0; k < t.values.size(); ++k) {
      if (!std::isfinite(t.values[k])) {
        throw NumericError("non-finite gradient in '" + t.name + "' at index " +
                           std::to_string(k) + " (step " + std::to_string(state.step + 1) + ")");
      }
    }
  }
  state.step += 1;
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.tensor_count(); ++i) {
    auto& p = params[i].values;
    const auto& g = grads[i].values;
    auto& m = state.first_moment[i].values;
    auto& v = state.second_moment[i].values;
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = hp.beta1 * m[k] + (1.0 - hp.beta1) * g[k];
      v[k] = hp.beta2 * v[k] + (1.0 - hp.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= hp.lr * m_hat / (std::sqrt(v_hat) + hp.eps);
    }
  }
}

}  // namespace batdiff
