#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cduap/data.hpp"
#include "cduap/losses.hpp"
#include "cduap/mlp.hpp"
#include "cduap/tensor.hpp"

namespace cduap {

enum class NormOrder { Linf, L2 };

std::string_view to_string(NormOrder norm);  // linf, l2
NormOrder parse_norm_order(std::string_view text);

// Ball: nearest point of the epsilon ball. Normalize: delta / ||delta||_p, the
// literal unit-sphere update, kept for reproduction experiments only.
enum class ProjectionMode { Ball, Normalize };

std::string_view to_string(ProjectionMode mode);  // ball, normalize
ProjectionMode parse_projection_mode(std::string_view text);

enum class SamplingMode { HalfHalf, Pooled };

std::string_view to_string(SamplingMode mode);  // half-half, pooled
SamplingMode parse_sampling_mode(std::string_view text);

struct Perturbation {
  Tensor delta;  // d entries
  double epsilon = 0.0;
  NormOrder norm = NormOrder::Linf;

  friend bool operator==(const Perturbation&, const Perturbation&) = default;
};

struct AttackConfig {
  std::string class_spec = "0:4";
  double epsilon = 0.15;
  NormOrder norm = NormOrder::Linf;
  LossConfig loss{};
  std::size_t batch_size = 64;
  std::size_t iterations = 500;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  bool clamp_inputs = true;
  ProjectionMode projection = ProjectionMode::Ball;
  SamplingMode sampling = SamplingMode::HalfHalf;

  void validate() const;
  friend bool operator==(const AttackConfig&, const AttackConfig&) = default;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double loss_t = 0.0;
  double loss_nt = 0.0;
  double loss_w = 0.0;
  double delta_norm = 0.0;  // after projection, in the configured norm
};

struct CraftResult {
  Perturbation perturbation;
  std::vector<IterationRecord> log;
  std::vector<std::string> warnings;
  bool all_classes = false;
};

double norm(std::span<const double> v, NormOrder order);

// Nearest point of {||delta||_p <= epsilon}: elementwise clamp for Linf,
// radial rescale for L2. Identity inside the ball.
Tensor project(const Tensor& delta, double epsilon, NormOrder order);

// delta / ||delta||_p; zero stays zero.
Tensor normalize(const Tensor& delta, NormOrder order);

// batch + delta on every row, clamped to the bounds when requested.
Tensor apply_perturbation(const Tensor& delta, const Tensor& batch, FeatureBounds bounds, bool clamp_inputs);

// Crafts a class-discriminative universal perturbation. The training set is
// expected to hold only samples the model classifies correctly. A spec that
// targets every class is routed to craft_ac_uap.
CraftResult craft_cd_uap(const MlpClassifier& model, const LabeledDataset& train, const AttackConfig& config);

// All classes targeted: full batches from the targeted pool, no
// non-targeted term, otherwise the same update rule.
CraftResult craft_ac_uap(const MlpClassifier& model, const LabeledDataset& train, const AttackConfig& config);

// The optimization loop itself, over caller-supplied batches:
// delta <- 0; repeat N times: L_w, gradient, ADAM descent step, projection.
CraftResult craft_from_batches(const PerturbationContext& context, const AttackConfig& config, BatchSource& batches);

}  // namespace cduap
