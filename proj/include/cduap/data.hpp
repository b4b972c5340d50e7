#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cduap/random.hpp"
#include "cduap/tensor.hpp"

namespace cduap {

struct MlpClassifier;

struct FeatureBounds {
  double lo = 0.0;
  double hi = 1.0;

  friend bool operator==(const FeatureBounds&, const FeatureBounds&) = default;
};

struct LabeledDataset {
  Tensor features;          // n x d
  std::vector<int> labels;  // n entries in [0, num_classes)
  int num_classes = 0;
  FeatureBounds bounds;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.rank() == 2 ? features.cols() : 0; }
  bool empty() const { return labels.empty(); }

  LabeledDataset subset(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> class_counts() const;

  // Throws DataError when labels or features violate the invariants.
  void validate() const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

// C Gaussian clusters; centers drawn uniformly inside the bounds with every
// pair at least 4*spread apart. Samples are clamped to the bounds.
LabeledDataset gen_blobs(int num_classes, std::size_t per_class, std::size_t dim, double spread,
                         std::uint64_t seed, FeatureBounds bounds = {});

// Concentric shells around the center of the feature box; class k has radius
// proportional to k+1.
LabeledDataset gen_rings(int num_classes, std::size_t per_class, std::size_t dim, std::uint64_t seed,
                         FeatureBounds bounds = {});

// Stratified: round(test_fraction * n_c) samples of each class go to test,
// but each side keeps at least one sample per class.
std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& dataset, double test_fraction,
                                                           std::uint64_t seed);

// Samples the model classifies correctly, in their original order.
LabeledDataset filter_correct(const MlpClassifier& model, const LabeledDataset& dataset);

struct ClassPartition {
  int num_classes = 0;
  std::vector<int> targeted;      // sorted, non-empty
  std::vector<int> non_targeted;  // sorted complement

  bool contains(int cls) const;
  bool all_targeted() const { return non_targeted.empty(); }

  friend bool operator==(const ClassPartition&, const ClassPartition&) = default;
};

// Grammar: comma separated terms, each `a`, `a:b` or `a:b:s` with both
// endpoints inclusive, or the keyword `all`.
ClassPartition parse_class_spec(std::string_view spec, int num_classes);

// Canonical spec text that parses back to the same partition.
std::string format_class_spec(const ClassPartition& partition);

// Ground-truth split of a dataset into (targeted, non-targeted) samples.
std::pair<LabeledDataset, LabeledDataset> partition_dataset(const LabeledDataset& dataset,
                                                            const ClassPartition& partition);

// Targeted classes with no samples in the dataset.
std::vector<int> missing_targeted_classes(const LabeledDataset& dataset, const ClassPartition& partition);

// One optimization batch, as row indices into the targeted and non-targeted
// sample pools. Each branch loss is its sum divided by the branch denominator.
struct BatchPair {
  std::vector<std::size_t> targeted;
  std::vector<std::size_t> non_targeted;
  std::size_t targeted_denominator = 0;
  std::size_t non_targeted_denominator = 0;

  friend bool operator==(const BatchPair&, const BatchPair&) = default;
};

// Endless index stream over [0, n): a fresh shuffle per pass.
class EpochSampler {
 public:
  EpochSampler(std::size_t n, Rng rng);
  std::size_t next();

 private:
  std::vector<std::size_t> order_;
  std::size_t cursor_;
  Rng rng_;
};

class BatchSource {
 public:
  virtual ~BatchSource() = default;
  virtual BatchPair next() = 0;
};

// b/2 targeted and b/2 non-targeted samples per batch.
class HalfHalfSampler final : public BatchSource {
 public:
  HalfHalfSampler(std::size_t n_targeted, std::size_t n_non_targeted, std::size_t batch_size,
                  std::uint64_t seed);
  BatchPair next() override;

 private:
  std::size_t half_;
  EpochSampler targeted_;
  EpochSampler non_targeted_;
};

// b samples drawn from the union of both pools, so branch sizes follow the
// pool ratio. Both branches are normalized by b.
class PooledSampler final : public BatchSource {
 public:
  PooledSampler(std::size_t n_targeted, std::size_t n_non_targeted, std::size_t batch_size, std::uint64_t seed);
  BatchPair next() override;

 private:
  std::size_t n_targeted_;
  std::size_t batch_size_;
  EpochSampler pool_;
};

// b targeted samples and an empty non-targeted branch (all classes targeted).
class TargetedOnlySampler final : public BatchSource {
 public:
  TargetedOnlySampler(std::size_t n_targeted, std::size_t batch_size, std::uint64_t seed);
  BatchPair next() override;

 private:
  std::size_t batch_size_;
  EpochSampler targeted_;
};

std::vector<BatchPair> half_half_batches(const LabeledDataset& train_targeted,
                                         const LabeledDataset& train_non_targeted, std::size_t batch_size,
                                         std::size_t iterations, std::uint64_t seed);

}  // namespace cduap
