#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cduap/attack.hpp"
#include "cduap/data.hpp"
#include "cduap/training.hpp"

namespace cduap {

struct DataRecipe {
  std::string generator = "blobs";  // blobs | rings
  int classes = 10;
  std::size_t per_class = 600;
  std::size_t dim = 32;
  double spread = 0.08;
  std::uint64_t seed = 0;
  double test_fraction = 1.0 / 6.0;
  FeatureBounds bounds{};

  friend bool operator==(const DataRecipe&, const DataRecipe&) = default;
};

struct ModelRecipe {
  std::vector<std::size_t> hidden{64, 64};
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  friend bool operator==(const ModelRecipe&, const ModelRecipe&) = default;
};

// Flat key=value file with section prefixes, e.g.
//
//   data.classes=10
//   model.hidden=64,64
//   attack.spec=0:4
//
// '#' starts a comment line. Every key has a default.
struct ExperimentConfig {
  DataRecipe data;
  ModelRecipe model;
  AttackConfig attack;
  std::vector<std::uint64_t> transfer_seeds{0, 1};
  std::string out = "out";

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

ExperimentConfig parse_config(std::string_view text);
// Applies one `key=value` assignment; unknown keys and bad values throw
// UsageError naming the field.
void apply_setting(ExperimentConfig& config, std::string_view assignment);
std::string format_config(const ExperimentConfig& config);

// Layer widths [d, hidden..., C] for the configured dataset.
std::vector<std::size_t> model_dims(const ExperimentConfig& config);
TrainConfig train_config(const ExperimentConfig& config);

}  // namespace cduap
