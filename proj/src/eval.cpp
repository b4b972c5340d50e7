#include "cduap/eval.hpp"

#include <algorithm>

#include "cduap/errors.hpp"

namespace cduap {

namespace {

double percent(std::size_t hits, std::size_t total) {
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

double accuracy(const MlpClassifier& model, const LabeledDataset& dataset,
                const std::optional<std::vector<int>>& class_filter) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!class_filter ||
        std::find(class_filter->begin(), class_filter->end(), dataset.labels[i]) != class_filter->end()) {
      rows.push_back(i);
    }
  }
  if (rows.empty()) throw UsageError("accuracy: no samples match the class filter");
  const std::vector<int> predicted = predict(model, dataset.features.gather_rows(rows));
  std::size_t hits = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) hits += predicted[k] == dataset.labels[rows[k]];
  return percent(hits, rows.size());
}

EvalReport evaluate_perturbation(const MlpClassifier& model, const LabeledDataset& test,
                                 const ClassPartition& partition, const Tensor& delta, bool clamp_inputs) {
  if (partition.targeted.empty()) throw UsageError("evaluation needs at least one targeted class");
  if (partition.num_classes != test.num_classes) throw UsageError("partition and test set disagree on class count");
  if (delta.size() != test.dim()) {
    throw DimensionError("perturbation width " + std::to_string(delta.size()) + " vs test dimension " +
                         std::to_string(test.dim()));
  }
  if (test.empty()) throw UsageError("evaluation on an empty test set");

  const std::vector<int> clean = predict(model, test.features);
  const std::vector<int> adv = predict(model, apply_perturbation(delta, test.features, test.bounds, clamp_inputs));

  EvalReport r;
  const auto classes = static_cast<std::size_t>(test.num_classes);
  r.class_total.assign(classes, 0);
  r.class_clean_correct.assign(classes, 0);
  r.class_adv_correct.assign(classes, 0);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto y = static_cast<std::size_t>(test.labels[i]);
    r.class_total[y] += 1;
    r.class_clean_correct[y] += clean[i] == test.labels[i];
    r.class_adv_correct[y] += adv[i] == test.labels[i];
  }
  std::size_t clean_t = 0, adv_t = 0, clean_nt = 0, adv_nt = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const bool targeted = partition.contains(static_cast<int>(c));
    (targeted ? r.n_t : r.n_nt) += r.class_total[c];
    (targeted ? clean_t : clean_nt) += r.class_clean_correct[c];
    (targeted ? adv_t : adv_nt) += r.class_adv_correct[c];
  }
  if (r.n_t == 0) throw UsageError("test set has no samples of the targeted classes");
  r.acc_t = percent(clean_t, r.n_t);
  r.adv_acc_t = percent(adv_t, r.n_t);
  r.aad_t = r.acc_t - r.adv_acc_t;
  if (r.n_nt > 0) {
    r.acc_nt = percent(clean_nt, r.n_nt);
    r.adv_acc_nt = percent(adv_nt, r.n_nt);
    r.aad_nt = *r.acc_nt - *r.adv_acc_nt;
    r.delta_aad = r.aad_t - *r.aad_nt;
  }
  return r;
}

namespace {

ExperimentCell run_cell(std::string label, const MlpClassifier& model, const LabeledDataset& train,
                        const LabeledDataset& test, const ClassPartition& partition, const AttackConfig& config) {
  ExperimentCell cell;
  cell.label = std::move(label);
  cell.config = config;
  try {
    CraftResult crafted = craft_cd_uap(model, train, config);
    cell.report = evaluate_perturbation(model, test, partition, crafted.perturbation.delta, config.clamp_inputs);
    cell.perturbation = std::move(crafted.perturbation);
  } catch (const Error& e) {
    cell.error = e.what();
  }
  return cell;
}

AttackConfig with_partition(AttackConfig config, const ClassPartition& partition) {
  config.class_spec = format_class_spec(partition);
  return config;
}

}  // namespace

std::vector<ExperimentCell> loss_matrix_sweep(const MlpClassifier& model, const LabeledDataset& train,
                                              const LabeledDataset& test, const ClassPartition& partition,
                                              const AttackConfig& base) {
  const LabeledDataset filtered = filter_correct(model, train);
  const AttackConfig shared = with_partition(base, partition);
  std::vector<ExperimentCell> cells;
  for (LossKind t : kSweepRows) {
    for (LossKind nt : kSweepColumns) {
      AttackConfig cfg = shared;
      cfg.loss.t_kind = t;
      cfg.loss.nt_kind = nt;
      cells.push_back(run_cell(std::string(to_string(t)) + "/" + std::string(to_string(nt)), model, filtered, test,
                               partition, cfg));
    }
  }
  return cells;
}

std::vector<ExperimentCell> ablation_sampling(const MlpClassifier& model, const LabeledDataset& train,
                                              const LabeledDataset& test, const ClassPartition& partition,
                                              const AttackConfig& base) {
  const LabeledDataset filtered = filter_correct(model, train);
  const auto [train_t, train_nt] = partition_dataset(filtered, partition);
  if (train_t.empty() || train_nt.empty()) throw UsageError("ablation needs both targeted and non-targeted samples");
  const double ratio = static_cast<double>(train_nt.size()) / static_cast<double>(train_t.size());

  const AttackConfig shared = with_partition(base, partition);
  struct Row {
    const char* label;
    SamplingMode sampling;
    double alpha;
    double beta;
  };
  const Row rows[] = {
      {"half-half", SamplingMode::HalfHalf, 1.0, 1.0},
      {"pooled", SamplingMode::Pooled, 1.0, 1.0},
      {"pooled-alpha-scaled", SamplingMode::Pooled, ratio, 1.0},
      {"pooled-beta-scaled", SamplingMode::Pooled, 1.0, 1.0 / ratio},
      {"targeted-only", SamplingMode::HalfHalf, 1.0, 0.0},
  };
  std::vector<ExperimentCell> cells;
  for (const Row& row : rows) {
    AttackConfig cfg = shared;
    cfg.sampling = row.sampling;
    cfg.loss.alpha = row.alpha;
    cfg.loss.beta = row.beta;
    cells.push_back(run_cell(row.label, model, filtered, test, partition, cfg));
  }
  return cells;
}

TransferMatrix transfer_matrix(const std::vector<MlpClassifier>& sources, const std::vector<MlpClassifier>& targets,
                               const LabeledDataset& train, const LabeledDataset& test,
                               const ClassPartition& partition, const AttackConfig& config) {
  if (sources.empty() || targets.empty()) throw UsageError("transfer matrix needs at least one source and target");
  const std::size_t d = sources.front().input_dim();
  const std::size_t c = sources.front().num_classes();
  auto check = [&](const MlpClassifier& m) {
    if (m.input_dim() != d || m.num_classes() != c) throw DimensionError("transfer models disagree on shape");
  };
  std::for_each(sources.begin(), sources.end(), check);
  std::for_each(targets.begin(), targets.end(), check);

  const AttackConfig cfg = with_partition(config, partition);
  TransferMatrix out;
  out.rows = sources.size();
  out.cols = targets.size();
  for (const MlpClassifier& source : sources) {
    out.perturbations.push_back(craft_cd_uap(source, filter_correct(source, train), cfg).perturbation);
  }
  for (std::size_t s = 0; s < sources.size(); ++s) {
    for (std::size_t t = 0; t < targets.size(); ++t) {
      TransferCell cell;
      cell.source = s;
      cell.target = t;
      cell.white_box = sources[s] == targets[t];
      cell.report = evaluate_perturbation(targets[t], test, partition, out.perturbations[s].delta, cfg.clamp_inputs);
      out.cells.push_back(std::move(cell));
    }
  }
  return out;
}

}  // namespace cduap
