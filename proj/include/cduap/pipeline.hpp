#pragma once

#include <utility>

#include "cduap/config.hpp"
#include "cduap/data.hpp"
#include "cduap/training.hpp"

namespace cduap {

// Generates the configured dataset and its stratified train/test split.
std::pair<LabeledDataset, LabeledDataset> make_datasets(const DataRecipe& recipe);

// Initializes and trains a victim with the configured recipe; `seed`
// overrides the model seed (used for independently seeded transfer models).
TrainResult train_victim(const ExperimentConfig& config, const LabeledDataset& train, const LabeledDataset& test,
                         std::uint64_t seed);

}  // namespace cduap
