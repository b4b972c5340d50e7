#include "cduap/attack.hpp"

#include <cmath>

#include "cduap/adam.hpp"
#include "cduap/errors.hpp"
#include "cduap/kernels.hpp"

namespace cduap {

std::string_view to_string(NormOrder norm) { return norm == NormOrder::Linf ? "linf" : "l2"; }

NormOrder parse_norm_order(std::string_view text) {
  if (text == "linf") return NormOrder::Linf;
  if (text == "l2") return NormOrder::L2;
  throw UsageError("unknown norm '" + std::string(text) + "' (expected linf or l2)");
}

std::string_view to_string(ProjectionMode mode) { return mode == ProjectionMode::Ball ? "ball" : "normalize"; }

ProjectionMode parse_projection_mode(std::string_view text) {
  if (text == "ball") return ProjectionMode::Ball;
  if (text == "normalize") return ProjectionMode::Normalize;
  throw UsageError("unknown projection '" + std::string(text) + "' (expected ball or normalize)");
}

std::string_view to_string(SamplingMode mode) { return mode == SamplingMode::HalfHalf ? "half-half" : "pooled"; }

SamplingMode parse_sampling_mode(std::string_view text) {
  if (text == "half-half") return SamplingMode::HalfHalf;
  if (text == "pooled") return SamplingMode::Pooled;
  throw UsageError("unknown sampling mode '" + std::string(text) + "' (expected half-half or pooled)");
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw UsageError("attack epsilon must be finite and >= 0");
  if (batch_size < 2 || batch_size % 2 != 0) throw UsageError("attack batch size must be even and >= 2");
  if (!(learning_rate > 0.0)) throw UsageError("attack learning rate must be positive");
  loss.validate();
}

double norm(std::span<const double> v, NormOrder order) {
  double out = 0.0;
  if (order == NormOrder::Linf) {
    for (double x : v) out = std::max(out, std::abs(x));
    return out;
  }
  for (double x : v) out += x * x;
  return std::sqrt(out);
}

Tensor project(const Tensor& delta, double epsilon, NormOrder order) {
  if (!(epsilon >= 0.0)) throw UsageError("projection radius must be >= 0");
  if (order == NormOrder::Linf) {
    Tensor out(delta.shape());
    kernels::active().clamp(delta.data(), -epsilon, epsilon, out.data(), delta.size());
    return out;
  }
  const double n = norm(delta.values(), NormOrder::L2);
  if (n <= epsilon) return delta;
  Tensor out = delta;
  const double factor = epsilon / n;
  for (double& v : out.values()) v *= factor;
  // Rounding can leave the rescaled vector a hair outside; shrink until inside.
  while (norm(out.values(), NormOrder::L2) > epsilon) {
    for (double& v : out.values()) v = std::nextafter(v, 0.0);
  }
  return out;
}

Tensor normalize(const Tensor& delta, NormOrder order) {
  const double n = norm(delta.values(), order);
  if (n == 0.0) return delta;
  Tensor out = delta;
  for (double& v : out.values()) v /= n;
  return out;
}

Tensor apply_perturbation(const Tensor& delta, const Tensor& batch, FeatureBounds bounds, bool clamp_inputs) {
  Tensor out = ops::add_row(batch, delta);
  return clamp_inputs ? ops::clamp(out, bounds.lo, bounds.hi) : out;
}

CraftResult craft_from_batches(const PerturbationContext& context, const AttackConfig& config, BatchSource& batches) {
  config.validate();
  if (!context.model) throw UsageError("craft: no model");
  const std::size_t d = context.model->input_dim();

  CraftResult result;
  result.perturbation.delta = Tensor({d}, 0.0);
  result.perturbation.epsilon = config.epsilon;
  result.perturbation.norm = config.norm;
  Tensor& delta = result.perturbation.delta;

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = config.learning_rate;
  const Tensor* delta_param = &delta;
  AdamState adam = AdamState::for_params(std::span<const Tensor* const>(&delta_param, 1), adam_cfg);
  Tensor* delta_slot = &delta;

  result.log.reserve(config.iterations);
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    const BatchPair batch = batches.next();
    WeightedLoss wl = weighted_loss(config.loss, batch, context, delta);
    if (!std::isfinite(wl.loss_w) || !wl.gradient.all_finite()) {
      throw NumericError("non-finite loss or gradient at iteration " + std::to_string(it));
    }
    adam_step(adam, std::span<Tensor* const>(&delta_slot, 1), std::span<const Tensor>(&wl.gradient, 1));
    delta = config.projection == ProjectionMode::Ball ? project(delta, config.epsilon, config.norm)
                                                      : normalize(delta, config.norm);
    result.log.push_back({it, wl.loss_t, wl.loss_nt, wl.loss_w, norm(delta.values(), config.norm)});
  }
  return result;
}

namespace {

void check_inputs(const MlpClassifier& model, const LabeledDataset& train) {
  if (model.input_dim() != train.dim()) {
    throw DimensionError("model input width " + std::to_string(model.input_dim()) + " vs dataset dimension " +
                         std::to_string(train.dim()));
  }
  if (model.num_classes() != static_cast<std::size_t>(train.num_classes)) {
    throw UsageError("model predicts " + std::to_string(model.num_classes()) + " classes, dataset has " +
                     std::to_string(train.num_classes));
  }
}

std::vector<std::string> missing_class_warnings(const LabeledDataset& train, const ClassPartition& partition) {
  std::vector<std::string> out;
  for (int c : missing_targeted_classes(train, partition)) {
    out.push_back("targeted class " + std::to_string(c) + " has no correctly classified training samples");
  }
  return out;
}

}  // namespace

CraftResult craft_cd_uap(const MlpClassifier& model, const LabeledDataset& train, const AttackConfig& config) {
  config.validate();
  check_inputs(model, train);
  const ClassPartition partition = parse_class_spec(config.class_spec, train.num_classes);
  if (partition.all_targeted()) return craft_ac_uap(model, train, config);

  const auto [train_t, train_nt] = partition_dataset(train, partition);
  if (train_t.empty() || train_nt.empty()) {
    throw UsageError(std::string("degenerate partition: no ") + (train_t.empty() ? "targeted" : "non-targeted") +
                     " training samples for spec '" + config.class_spec + "'");
  }
  const AttackPool pool_t = make_attack_pool(model, train_t);
  const AttackPool pool_nt = make_attack_pool(model, train_nt);
  const PerturbationContext context{&model, &pool_t, &pool_nt, train.bounds, config.clamp_inputs};

  CraftResult result;
  if (config.sampling == SamplingMode::HalfHalf) {
    HalfHalfSampler sampler(pool_t.size(), pool_nt.size(), config.batch_size, config.seed);
    result = craft_from_batches(context, config, sampler);
  } else {
    PooledSampler sampler(pool_t.size(), pool_nt.size(), config.batch_size, config.seed);
    result = craft_from_batches(context, config, sampler);
  }
  result.warnings = missing_class_warnings(train, partition);
  return result;
}

CraftResult craft_ac_uap(const MlpClassifier& model, const LabeledDataset& train, const AttackConfig& config) {
  config.validate();
  check_inputs(model, train);
  const ClassPartition partition = parse_class_spec(config.class_spec, train.num_classes);
  if (!partition.all_targeted()) {
    throw UsageError("AC-UAP mode requires every class to be targeted, got '" + config.class_spec + "'");
  }
  if (train.empty()) throw UsageError("degenerate partition: no training samples");
  const AttackPool pool_t = make_attack_pool(model, train);
  const AttackPool pool_nt;
  const PerturbationContext context{&model, &pool_t, &pool_nt, train.bounds, config.clamp_inputs};
  TargetedOnlySampler sampler(pool_t.size(), config.batch_size, config.seed);
  CraftResult result = craft_from_batches(context, config, sampler);
  result.warnings = missing_class_warnings(train, partition);
  result.all_classes = true;
  return result;
}

}  // namespace cduap
