#include "cduap/training.hpp"

#include <cmath>
#include <numeric>

#include "cduap/errors.hpp"
#include "cduap/random.hpp"

namespace cduap {

double classification_accuracy(const MlpClassifier& model, const LabeledDataset& dataset) {
  if (dataset.empty()) throw UsageError("accuracy of an empty dataset");
  const std::vector<int> predicted = predict(model, dataset.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == dataset.labels[i];
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

TrainResult train_classifier(MlpClassifier model, const LabeledDataset& train, const LabeledDataset* test,
                             const TrainConfig& config) {
  if (train.empty()) throw UsageError("cannot train on an empty dataset");
  if (model.num_classes() != static_cast<std::size_t>(train.num_classes)) {
    throw UsageError("model has " + std::to_string(model.num_classes()) + " outputs but the dataset has " +
                     std::to_string(train.num_classes) + " classes");
  }
  if (model.input_dim() != train.dim()) {
    throw DimensionError("model input width " + std::to_string(model.input_dim()) + " vs dataset dimension " +
                         std::to_string(train.dim()));
  }
  if (config.batch_size == 0) throw UsageError("training batch size must be positive");

  TrainResult result;
  auto params = model.parameters();
  const std::vector<const Tensor*> const_params(params.begin(), params.end());
  AdamState adam = AdamState::for_params(const_params, config.adam);
  Rng rng = Rng::derived(config.seed, 20);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      std::vector<int> labels;
      labels.reserve(idx.size());
      for (std::size_t i : idx) labels.push_back(train.labels[i]);

      Tape tape;
      const MlpVars vars = attach(tape, model, true);
      const Var x = tape.constant(train.features.gather_rows(idx));
      const Var logp = log_softmax(forward_logits(vars, x));
      const Var loss = scale(mean(pick(logp, labels)), -1.0);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) throw NumericError("training loss is not finite at epoch " + std::to_string(epoch));
      const Gradients grads = tape.backward(loss);

      std::vector<Tensor> g;
      for (std::size_t l = 0; l < vars.weights.size(); ++l) {
        g.push_back(grads[vars.weights[l]]);
        g.push_back(grads[vars.biases[l]]);
      }
      adam_step(adam, params, g);
      loss_sum += value;
      ++batches;
    }
    EpochRecord record;
    record.epoch = epoch + 1;
    record.mean_loss = loss_sum / static_cast<double>(batches);
    record.train_accuracy = classification_accuracy(model, train);
    record.test_accuracy = test && !test->empty() ? classification_accuracy(model, *test) : record.train_accuracy;
    result.history.push_back(record);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace cduap
