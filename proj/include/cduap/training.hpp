#pragma once

#include <cstdint>
#include <vector>

#include "cduap/adam.hpp"
#include "cduap/data.hpp"
#include "cduap/mlp.hpp"

namespace cduap {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  AdamConfig adam{};
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double train_accuracy = 0.0;  // fraction in [0, 1]
  double test_accuracy = 0.0;   // fraction in [0, 1]; equals train when no test set is given
};

struct TrainResult {
  MlpClassifier model;
  std::vector<EpochRecord> history;
};

// Minibatch cross-entropy against the true labels.
TrainResult train_classifier(MlpClassifier model, const LabeledDataset& train, const LabeledDataset* test,
                             const TrainConfig& config);

// Fraction of samples classified correctly.
double classification_accuracy(const MlpClassifier& model, const LabeledDataset& dataset);

}  // namespace cduap
