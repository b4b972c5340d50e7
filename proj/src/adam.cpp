#include "cduap/adam.hpp"

#include <cmath>

#include "cduap/errors.hpp"
#include "cduap/kernels.hpp"

namespace cduap {

AdamState AdamState::for_params(std::span<const Tensor* const> params, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  for (const Tensor* p : params) {
    state.m.emplace_back(p->shape(), 0.0);
    state.v.emplace_back(p->shape(), 0.0);
  }
  return state;
}

void adam_step(AdamState& state, std::span<Tensor* const> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " params, " +
                         std::to_string(grads.size()) + " grads, " + std::to_string(state.m.size()) +
                         " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape() || params[i]->shape() != state.m[i].shape()) {
      throw DimensionError("adam_step: param " + shape_string(params[i]->shape()) + " vs grad " +
                           shape_string(grads[i].shape()));
    }
  }
  state.step += 1;
  const AdamConfig& cfg = state.config;
  const double t = static_cast<double>(state.step);
  const kernels::AdamCoeffs coeffs{
      cfg.beta1,
      cfg.beta2,
      1.0 - cfg.beta1,
      1.0 - cfg.beta2,
      1.0 - std::pow(cfg.beta1, t),
      1.0 - std::pow(cfg.beta2, t),
      cfg.learning_rate,
      cfg.epsilon,
  };
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < params.size(); ++i) {
    k.adam_update(params[i]->data(), state.m[i].data(), state.v[i].data(), grads[i].data(), grads[i].size(),
                  coeffs);
  }
}

}  // namespace cduap
