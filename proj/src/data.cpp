#include "cduap/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "cduap/errors.hpp"
#include "cduap/mlp.hpp"

namespace cduap {

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.features = features.gather_rows(indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels[i]);
  out.num_classes = num_classes;
  out.bounds = bounds;
  return out;
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) counts[static_cast<std::size_t>(y)] += 1;
  return counts;
}

void LabeledDataset::validate() const {
  if (num_classes < 2) throw DataError("dataset needs at least 2 classes");
  if (features.rank() != 2 || features.rows() != labels.size()) {
    throw DataError("dataset features " + shape_string(features.shape()) + " do not match " +
                    std::to_string(labels.size()) + " labels");
  }
  if (!(bounds.lo < bounds.hi)) throw DataError("dataset bounds must satisfy lo < hi");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw DataError("sample " + std::to_string(i) + " has label " + std::to_string(labels[i]) +
                      " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
  for (double v : features.values()) {
    if (!(v >= bounds.lo && v <= bounds.hi)) throw DataError("feature value outside dataset bounds");
  }
}

namespace {

void check_generator_args(int num_classes, std::size_t per_class, std::size_t dim, FeatureBounds bounds) {
  if (num_classes < 2) throw UsageError("generator needs at least 2 classes");
  if (dim < 2) throw UsageError("generator needs dimension >= 2");
  if (per_class < 1) throw UsageError("generator needs at least one sample per class");
  if (!(bounds.lo < bounds.hi)) throw UsageError("generator bounds must satisfy lo < hi");
}

double distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum);
}

}  // namespace

LabeledDataset gen_blobs(int num_classes, std::size_t per_class, std::size_t dim, double spread,
                         std::uint64_t seed, FeatureBounds bounds) {
  check_generator_args(num_classes, per_class, dim, bounds);
  if (!(spread > 0.0)) throw UsageError("blob spread must be positive");
  constexpr int kMaxAttempts = 1000;
  const auto classes = static_cast<std::size_t>(num_classes);
  const double range = bounds.hi - bounds.lo;
  // centers live in the middle 40% of the box so a 0.15 Linf budget can reach neighbours
  const double inset = 0.3 * range;

  Rng rng = Rng::derived(seed, 0);
  Tensor centers({classes, dim});
  for (std::size_t c = 0; c < classes; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      for (double& v : centers.row(c)) v = rng.uniform(bounds.lo + inset, bounds.hi - inset);
      placed = true;
      for (std::size_t other = 0; other < c && placed; ++other) {
        placed = distance(centers.row(c), centers.row(other)) >= 4.0 * spread;
      }
    }
    if (!placed) {
      throw GenerationError("could not place " + std::to_string(num_classes) + " blob centers " +
                            std::to_string(4.0 * spread) + " apart in dimension " + std::to_string(dim));
    }
  }

  Rng noise = Rng::derived(seed, 1);
  LabeledDataset out;
  out.num_classes = num_classes;
  out.bounds = bounds;
  out.features = Tensor({classes * per_class, dim});
  out.labels.reserve(classes * per_class);
  for (std::size_t c = 0; c < classes; ++c) {
    const auto center = centers.row(c);
    for (std::size_t s = 0; s < per_class; ++s) {
      auto row = out.features.row(out.labels.size());
      for (std::size_t j = 0; j < dim; ++j) {
        row[j] = std::clamp(center[j] + spread * noise.normal(), bounds.lo, bounds.hi);
      }
      out.labels.push_back(static_cast<int>(c));
    }
  }
  return out;
}

LabeledDataset gen_rings(int num_classes, std::size_t per_class, std::size_t dim, std::uint64_t seed,
                         FeatureBounds bounds) {
  check_generator_args(num_classes, per_class, dim, bounds);
  const auto classes = static_cast<std::size_t>(num_classes);
  const double mid = 0.5 * (bounds.lo + bounds.hi);
  const double outer = 0.45 * (bounds.hi - bounds.lo);
  const double gap = outer / static_cast<double>(classes);
  const double thickness = 0.1 * gap;

  Rng rng = Rng::derived(seed, 2);
  LabeledDataset out;
  out.num_classes = num_classes;
  out.bounds = bounds;
  out.features = Tensor({classes * per_class, dim});
  out.labels.reserve(classes * per_class);
  std::vector<double> direction(dim);
  for (std::size_t c = 0; c < classes; ++c) {
    const double radius = gap * static_cast<double>(c + 1);
    for (std::size_t s = 0; s < per_class; ++s) {
      double norm = 0.0;
      while (norm == 0.0) {
        norm = 0.0;
        for (double& v : direction) {
          v = rng.normal();
          norm += v * v;
        }
        norm = std::sqrt(norm);
      }
      const double r = radius + thickness * rng.normal();
      auto row = out.features.row(out.labels.size());
      for (std::size_t j = 0; j < dim; ++j) {
        row[j] = std::clamp(mid + r * direction[j] / norm, bounds.lo, bounds.hi);
      }
      out.labels.push_back(static_cast<int>(c));
    }
  }
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& dataset, double test_fraction,
                                                           std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw UsageError("test fraction must lie in (0, 1)");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(dataset.num_classes));
  for (std::size_t i = 0; i < dataset.size(); ++i) by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);

  Rng rng = Rng::derived(seed, 3);
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < 2) {
      throw UsageError("class " + std::to_string(c) + " has fewer than 2 samples and cannot be split");
    }
    const auto n = static_cast<double>(members.size());
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * n));
    n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
    rng.shuffle(std::span<std::size_t>(members));
    test_idx.insert(test_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_idx.insert(train_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {dataset.subset(train_idx), dataset.subset(test_idx)};
}

LabeledDataset filter_correct(const MlpClassifier& model, const LabeledDataset& dataset) {
  if (model.num_classes() != static_cast<std::size_t>(dataset.num_classes)) {
    throw UsageError("model predicts " + std::to_string(model.num_classes()) + " classes, dataset has " +
                     std::to_string(dataset.num_classes));
  }
  if (dataset.empty()) return dataset;
  const std::vector<int> predicted = predict(model, dataset.features);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (predicted[i] == dataset.labels[i]) keep.push_back(i);
  }
  return dataset.subset(keep);
}

bool ClassPartition::contains(int cls) const {
  return std::binary_search(targeted.begin(), targeted.end(), cls);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

long parse_index(std::string_view text, std::string_view term) {
  text = trim(text);
  long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw SpecError(std::string(term), "'" + std::string(text) + "' is not an integer");
  }
  return value;
}

}  // namespace

ClassPartition parse_class_spec(std::string_view spec, int num_classes) {
  if (num_classes < 1) throw UsageError("class spec needs a positive class count");
  if (trim(spec).empty()) throw SpecError(std::string(spec), "empty class spec");
  std::set<int> chosen;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t comma = std::min(spec.find(',', start), spec.size());
    const std::string_view term = trim(spec.substr(start, comma - start));
    start = comma + 1;
    const std::string term_text(term);
    if (term.empty()) throw SpecError(term_text, "empty term");
    if (term == "all") {
      for (int c = 0; c < num_classes; ++c) chosen.insert(c);
      continue;
    }
    std::vector<long> parts;
    std::size_t pos = 0;
    while (true) {
      const std::size_t colon = term.find(':', pos);
      parts.push_back(parse_index(term.substr(pos, colon == std::string_view::npos ? term.size() - pos : colon - pos),
                                  term));
      if (colon == std::string_view::npos) break;
      pos = colon + 1;
    }
    if (parts.size() > 3) throw SpecError(term_text, "expected a, a:b or a:b:s");
    const long first = parts[0];
    const long last = parts.size() >= 2 ? parts[1] : first;
    const long step = parts.size() == 3 ? parts[2] : 1;
    if (step <= 0) throw SpecError(term_text, "step must be positive");
    if (first < 0 || last < 0) throw SpecError(term_text, "class indices must be non-negative");
    if (first >= num_classes || last >= num_classes) {
      throw SpecError(term_text, "class index out of range for " + std::to_string(num_classes) + " classes");
    }
    if (first > last) throw SpecError(term_text, "range is empty");
    for (long c = first; c <= last; c += step) chosen.insert(static_cast<int>(c));
  }
  if (chosen.empty()) throw SpecError(std::string(spec), "selects no classes");

  ClassPartition out;
  out.num_classes = num_classes;
  out.targeted.assign(chosen.begin(), chosen.end());
  for (int c = 0; c < num_classes; ++c) {
    if (!chosen.contains(c)) out.non_targeted.push_back(c);
  }
  return out;
}

std::string format_class_spec(const ClassPartition& partition) {
  if (partition.all_targeted()) return "all";
  std::string out;
  const auto& t = partition.targeted;
  for (std::size_t i = 0; i < t.size();) {
    std::size_t j = i;
    while (j + 1 < t.size() && t[j + 1] == t[j] + 1) ++j;
    if (!out.empty()) out += ",";
    out += std::to_string(t[i]);
    if (j > i) out += ":" + std::to_string(t[j]);
    i = j + 1;
  }
  return out;
}

std::pair<LabeledDataset, LabeledDataset> partition_dataset(const LabeledDataset& dataset,
                                                            const ClassPartition& partition) {
  if (partition.num_classes != dataset.num_classes) {
    throw UsageError("partition covers " + std::to_string(partition.num_classes) + " classes, dataset has " +
                     std::to_string(dataset.num_classes));
  }
  std::vector<std::size_t> t_idx, nt_idx;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (partition.contains(dataset.labels[i]) ? t_idx : nt_idx).push_back(i);
  }
  return {dataset.subset(t_idx), dataset.subset(nt_idx)};
}

std::vector<int> missing_targeted_classes(const LabeledDataset& dataset, const ClassPartition& partition) {
  const auto counts = dataset.class_counts();
  std::vector<int> missing;
  for (int c : partition.targeted) {
    if (counts[static_cast<std::size_t>(c)] == 0) missing.push_back(c);
  }
  return missing;
}

EpochSampler::EpochSampler(std::size_t n, Rng rng) : order_(n), cursor_(n), rng_(std::move(rng)) {
  if (n == 0) throw UsageError("cannot sample from an empty pool");
  for (std::size_t i = 0; i < n; ++i) order_[i] = i;
}

std::size_t EpochSampler::next() {
  if (cursor_ == order_.size()) {
    rng_.shuffle(std::span<std::size_t>(order_));
    cursor_ = 0;
  }
  return order_[cursor_++];
}

namespace {

void check_batch_size(std::size_t batch_size) {
  if (batch_size < 2 || batch_size % 2 != 0) {
    throw UsageError("batch size must be even and at least 2, got " + std::to_string(batch_size));
  }
}

EpochSampler make_pool(std::size_t n, std::uint64_t seed, std::uint64_t stream, const char* what) {
  if (n == 0) {
    throw UsageError(std::string("no ") + what +
                     " samples to draw from; when every class is targeted use AC-UAP mode");
  }
  return EpochSampler(n, Rng::derived(seed, stream));
}

}  // namespace

HalfHalfSampler::HalfHalfSampler(std::size_t n_targeted, std::size_t n_non_targeted, std::size_t batch_size,
                                 std::uint64_t seed)
    : half_((check_batch_size(batch_size), batch_size / 2)),
      targeted_(make_pool(n_targeted, seed, 10, "targeted")),
      non_targeted_(make_pool(n_non_targeted, seed, 11, "non-targeted")) {}

BatchPair HalfHalfSampler::next() {
  BatchPair pair;
  pair.targeted.reserve(half_);
  pair.non_targeted.reserve(half_);
  for (std::size_t i = 0; i < half_; ++i) pair.targeted.push_back(targeted_.next());
  for (std::size_t i = 0; i < half_; ++i) pair.non_targeted.push_back(non_targeted_.next());
  pair.targeted_denominator = half_;
  pair.non_targeted_denominator = half_;
  return pair;
}

PooledSampler::PooledSampler(std::size_t n_targeted, std::size_t n_non_targeted, std::size_t batch_size,
                             std::uint64_t seed)
    : n_targeted_(n_targeted),
      batch_size_((check_batch_size(batch_size), batch_size)),
      pool_(make_pool(n_targeted + n_non_targeted, seed, 12, "pooled")) {}

BatchPair PooledSampler::next() {
  BatchPair pair;
  for (std::size_t i = 0; i < batch_size_; ++i) {
    const std::size_t idx = pool_.next();
    if (idx < n_targeted_) {
      pair.targeted.push_back(idx);
    } else {
      pair.non_targeted.push_back(idx - n_targeted_);
    }
  }
  pair.targeted_denominator = batch_size_;
  pair.non_targeted_denominator = batch_size_;
  return pair;
}

TargetedOnlySampler::TargetedOnlySampler(std::size_t n_targeted, std::size_t batch_size, std::uint64_t seed)
    : batch_size_((check_batch_size(batch_size), batch_size)),
      targeted_(make_pool(n_targeted, seed, 10, "targeted")) {}

BatchPair TargetedOnlySampler::next() {
  BatchPair pair;
  pair.targeted.reserve(batch_size_);
  for (std::size_t i = 0; i < batch_size_; ++i) pair.targeted.push_back(targeted_.next());
  pair.targeted_denominator = batch_size_;
  pair.non_targeted_denominator = 0;
  return pair;
}

std::vector<BatchPair> half_half_batches(const LabeledDataset& train_targeted,
                                         const LabeledDataset& train_non_targeted, std::size_t batch_size,
                                         std::size_t iterations, std::uint64_t seed) {
  HalfHalfSampler sampler(train_targeted.size(), train_non_targeted.size(), batch_size, seed);
  std::vector<BatchPair> out;
  out.reserve(iterations);
  for (std::size_t i = 0; i < iterations; ++i) out.push_back(sampler.next());
  return out;
}

}  // namespace cduap
