#include "cduap/losses.hpp"

#include "cduap/errors.hpp"

namespace cduap {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::CE:
      return "ce";
    case LossKind::Logit:
      return "logit";
    case LossKind::BoundedLogit:
      return "bl";
    case LossKind::Absent:
      return "none";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view text) {
  if (text == "ce") return LossKind::CE;
  if (text == "logit") return LossKind::Logit;
  if (text == "bl") return LossKind::BoundedLogit;
  if (text == "none") return LossKind::Absent;
  throw UsageError("unknown loss kind '" + std::string(text) + "' (expected ce, logit, bl or none)");
}

void LossConfig::validate() const {
  if (t_kind == LossKind::Absent) throw UsageError("the targeted loss cannot be 'none'");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw UsageError("loss weights alpha and beta must be non-negative");
}

Var loss_terms(LossKind kind, std::span<const int> clean_labels, Var perturbed_logits) {
  switch (kind) {
    case LossKind::CE:
      return pick(log_softmax(perturbed_logits), clean_labels);
    case LossKind::Logit:
      return pick(perturbed_logits, clean_labels);
    case LossKind::BoundedLogit:
      return margin_hinge(perturbed_logits, clean_labels);
    case LossKind::Absent:
      break;
  }
  throw UsageError("no per-sample terms for loss kind 'none'");
}

Var loss_t_ce(std::span<const int> clean_labels, Var perturbed_logits) {
  return mean(loss_terms(LossKind::CE, clean_labels, perturbed_logits));
}

Var loss_t_logit(std::span<const int> clean_labels, Var perturbed_logits) {
  return mean(loss_terms(LossKind::Logit, clean_labels, perturbed_logits));
}

Var loss_t_bl(std::span<const int> clean_labels, Var perturbed_logits) {
  return mean(loss_terms(LossKind::BoundedLogit, clean_labels, perturbed_logits));
}

Var loss_t(LossKind kind, std::span<const int> clean_labels, Var perturbed_logits) {
  if (kind == LossKind::Absent) throw UsageError("the targeted loss cannot be 'none'");
  return mean(loss_terms(kind, clean_labels, perturbed_logits));
}

Var loss_nt(LossKind kind, std::span<const int> clean_labels, Var perturbed_logits) {
  if (kind == LossKind::Absent) return perturbed_logits.tape->constant(Tensor::scalar(0.0));
  return scale(loss_t(kind, clean_labels, perturbed_logits), -1.0);
}

AttackPool make_attack_pool(const MlpClassifier& model, const LabeledDataset& samples) {
  AttackPool pool;
  pool.features = samples.features;
  if (!samples.empty()) pool.clean_labels = predict(model, samples.features);
  return pool;
}

namespace {

struct Branch {
  Var value;
  double plain = 0.0;
};

// Mean over the batch rows rescaled to sum / denominator.
Var branch_loss(Tape& tape, const MlpVars& vars, Var delta, const AttackPool& pool,
                std::span<const std::size_t> rows, std::size_t denominator, LossKind kind, bool negate,
                const PerturbationContext& ctx) {
  Tensor x = pool.features.gather_rows(rows);
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (std::size_t r : rows) labels.push_back(pool.clean_labels[r]);
  Var perturbed = add_row(tape.constant(std::move(x)), delta);
  if (ctx.clamp_inputs) perturbed = clamp(perturbed, ctx.bounds.lo, ctx.bounds.hi);
  const Var logits = forward_logits(vars, perturbed);
  Var loss = negate ? loss_nt(kind, labels, logits) : loss_t(kind, labels, logits);
  const double ratio = static_cast<double>(rows.size()) / static_cast<double>(denominator);
  if (ratio != 1.0) loss = scale(loss, ratio);
  return loss;
}

}  // namespace

WeightedLoss weighted_loss(const LossConfig& config, const BatchPair& batch, const PerturbationContext& context,
                           const Tensor& delta) {
  config.validate();
  if (!context.model || !context.targeted || !context.non_targeted) {
    throw UsageError("weighted_loss: incomplete perturbation context");
  }
  const MlpClassifier& model = *context.model;
  if (delta.rank() != 1 || delta.size() != model.input_dim()) {
    throw DimensionError("perturbation " + shape_string(delta.shape()) + " does not match model input width " +
                         std::to_string(model.input_dim()));
  }
  const bool has_t = !batch.targeted.empty();
  const bool has_nt = !batch.non_targeted.empty() && config.nt_kind != LossKind::Absent;
  if (!has_t && batch.non_targeted.empty()) throw UsageError("weighted_loss: empty batch");

  Tape tape;
  const MlpVars vars = attach(tape, model, false);
  const Var d = tape.leaf(delta, true);

  WeightedLoss out;
  Var total = scale(tape.constant(Tensor::scalar(0.0)), 1.0);
  bool have_total = false;
  if (has_t) {
    const Var lt = branch_loss(tape, vars, d, *context.targeted, batch.targeted, batch.targeted_denominator,
                               config.t_kind, false, context);
    out.loss_t = lt.value()[0];
    total = scale(lt, config.alpha);
    have_total = true;
  }
  if (has_nt) {
    const Var lnt = branch_loss(tape, vars, d, *context.non_targeted, batch.non_targeted,
                                batch.non_targeted_denominator, config.nt_kind, true, context);
    out.loss_nt = lnt.value()[0];
    const Var weighted = scale(lnt, config.beta);
    total = have_total ? add(total, weighted) : weighted;
    have_total = true;
  }
  out.loss_w = total.value()[0];
  if (have_total) {
    out.gradient = tape.backward(total)[d];
  } else {
    out.gradient = Tensor(delta.shape(), 0.0);
  }
  return out;
}

}  // namespace cduap
