#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cduap/tensor.hpp"

namespace cduap {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  // Zero moments shaped like the given parameters.
  static AdamState for_params(std::span<const Tensor* const> params, const AdamConfig& config);
};

// One bias-corrected descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(AdamState& state, std::span<Tensor* const> params, std::span<const Tensor> grads);

}  // namespace cduap
