#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cduap/attack.hpp"
#include "cduap/data.hpp"
#include "cduap/mlp.hpp"

namespace cduap {

// Clean and perturbed accuracies split by ground-truth membership in the
// targeted set, in percent. The non-targeted fields are absent when every
// class is targeted.
struct EvalReport {
  double acc_t = 0.0;
  double adv_acc_t = 0.0;
  double aad_t = 0.0;
  std::optional<double> acc_nt;
  std::optional<double> adv_acc_nt;
  std::optional<double> aad_nt;
  std::optional<double> delta_aad;

  std::size_t n_t = 0;
  std::size_t n_nt = 0;
  // Per class: samples, clean hits, perturbed hits.
  std::vector<std::size_t> class_total;
  std::vector<std::size_t> class_clean_correct;
  std::vector<std::size_t> class_adv_correct;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Percent of the selected samples predicted correctly. With no filter every
// sample counts.
double accuracy(const MlpClassifier& model, const LabeledDataset& dataset,
                const std::optional<std::vector<int>>& class_filter = std::nullopt);

EvalReport evaluate_perturbation(const MlpClassifier& model, const LabeledDataset& test,
                                 const ClassPartition& partition, const Tensor& delta, bool clamp_inputs = true);

// One crafted perturbation with its evaluation.
struct ExperimentCell {
  std::string label;
  AttackConfig config;
  std::optional<EvalReport> report;
  std::optional<Perturbation> perturbation;
  std::string error;  // non-empty when crafting or evaluation failed
};

// Rows: t_kind in {ce, logit, bl}; columns: nt_kind in {none, ce, logit, bl}.
// Twelve cells in row-major order; a failed cell records its error.
std::vector<ExperimentCell> loss_matrix_sweep(const MlpClassifier& model, const LabeledDataset& train,
                                              const LabeledDataset& test, const ClassPartition& partition,
                                              const AttackConfig& base);

inline constexpr LossKind kSweepRows[] = {LossKind::CE, LossKind::Logit, LossKind::BoundedLogit};
inline constexpr LossKind kSweepColumns[] = {LossKind::Absent, LossKind::CE, LossKind::Logit, LossKind::BoundedLogit};

// Five rows: half-half (1, 1); pooled (1, 1); pooled (|X_nt|/|X_t|, 1);
// pooled (1, |X_t|/|X_nt|); targeted only (1, 0).
std::vector<ExperimentCell> ablation_sampling(const MlpClassifier& model, const LabeledDataset& train,
                                              const LabeledDataset& test, const ClassPartition& partition,
                                              const AttackConfig& base);

struct TransferCell {
  std::size_t source = 0;
  std::size_t target = 0;
  bool white_box = false;
  EvalReport report;
};

struct TransferMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Perturbation> perturbations;  // one per source
  std::vector<TransferCell> cells;          // row-major

  const TransferCell& at(std::size_t source, std::size_t target) const { return cells[source * cols + target]; }
};

// Crafts on each source (using its own correctly classified training
// samples) and evaluates on every target. Cells with source == target are
// white-box when the source and target lists are the same models.
TransferMatrix transfer_matrix(const std::vector<MlpClassifier>& sources, const std::vector<MlpClassifier>& targets,
                               const LabeledDataset& train, const LabeledDataset& test,
                               const ClassPartition& partition, const AttackConfig& config);

}  // namespace cduap
