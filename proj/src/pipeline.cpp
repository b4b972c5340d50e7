#include "cduap/pipeline.hpp"

#include "cduap/errors.hpp"

namespace cduap {

std::pair<LabeledDataset, LabeledDataset> make_datasets(const DataRecipe& recipe) {
  LabeledDataset all;
  if (recipe.generator == "blobs") {
    all = gen_blobs(recipe.classes, recipe.per_class, recipe.dim, recipe.spread, recipe.seed, recipe.bounds);
  } else if (recipe.generator == "rings") {
    all = gen_rings(recipe.classes, recipe.per_class, recipe.dim, recipe.seed, recipe.bounds);
  } else {
    throw UsageError("unknown generator '" + recipe.generator + "'");
  }
  return split_train_test(all, recipe.test_fraction, recipe.seed);
}

TrainResult train_victim(const ExperimentConfig& config, const LabeledDataset& train, const LabeledDataset& test,
                         std::uint64_t seed) {
  TrainConfig tc = train_config(config);
  tc.seed = seed;
  return train_classifier(MlpClassifier::init(model_dims(config), seed), train, &test, tc);
}

}  // namespace cduap
