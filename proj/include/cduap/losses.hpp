#pragma once

#include <span>
#include <string_view>

#include "cduap/autodiff.hpp"
#include "cduap/data.hpp"
#include "cduap/mlp.hpp"

namespace cduap {

// Absent is only meaningful for the non-targeted branch.
enum class LossKind { CE, Logit, BoundedLogit, Absent };

std::string_view to_string(LossKind kind);  // ce, logit, bl, none
LossKind parse_loss_kind(std::string_view text);

struct LossConfig {
  LossKind t_kind = LossKind::BoundedLogit;
  LossKind nt_kind = LossKind::CE;
  double alpha = 1.0;
  double beta = 1.0;

  void validate() const;
  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

// Targeted-branch losses. `clean_labels` holds c = argmax F(x) of the clean
// inputs; each loss averages over the batch rows and decreases as the
// samples move away from c.
//
//   ce:    mean log softmax(L(x+d))[c]          (= -H(F(x+d), c))
//   logit: mean L_c(x+d)
//   bl:    mean (L_c(x+d) - max_{i!=c} L_i(x+d))^+
Var loss_t_ce(std::span<const int> clean_labels, Var perturbed_logits);
Var loss_t_logit(std::span<const int> clean_labels, Var perturbed_logits);
Var loss_t_bl(std::span<const int> clean_labels, Var perturbed_logits);
Var loss_t(LossKind kind, std::span<const int> clean_labels, Var perturbed_logits);

// Non-targeted branch: the sign-flipped targeted loss. Absent yields a
// constant zero.
Var loss_nt(LossKind kind, std::span<const int> clean_labels, Var perturbed_logits);

// Per-row terms whose mean is loss_t.
Var loss_terms(LossKind kind, std::span<const int> clean_labels, Var perturbed_logits);

// Clean samples available to the attack, with their cached pseudo-labels.
struct AttackPool {
  Tensor features;
  std::vector<int> clean_labels;

  std::size_t size() const { return clean_labels.size(); }
};

AttackPool make_attack_pool(const MlpClassifier& model, const LabeledDataset& samples);

struct PerturbationContext {
  const MlpClassifier* model = nullptr;
  const AttackPool* targeted = nullptr;
  const AttackPool* non_targeted = nullptr;
  FeatureBounds bounds;
  bool clamp_inputs = true;
};

struct WeightedLoss {
  double loss_t = 0.0;
  double loss_nt = 0.0;
  double loss_w = 0.0;
  Tensor gradient;  // d loss_w / d delta
};

// L_w = alpha * L_t(B_t) + beta * L_nt(B_nt) on clamp(x + delta), with its
// gradient with respect to delta.
WeightedLoss weighted_loss(const LossConfig& config, const BatchPair& batch, const PerturbationContext& context,
                           const Tensor& delta);

}  // namespace cduap
