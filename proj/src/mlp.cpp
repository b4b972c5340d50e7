#include "cduap/mlp.hpp"

#include <cmath>

#include "cduap/errors.hpp"
#include "cduap/random.hpp"

namespace cduap {

MlpClassifier MlpClassifier::init(std::vector<std::size_t> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw UsageError("model needs at least input and output widths");
  if (dims.back() < 2) throw UsageError("model needs at least 2 output classes");
  for (std::size_t w : dims) {
    if (w == 0) throw UsageError("layer widths must be positive");
  }
  MlpClassifier model;
  model.dims = std::move(dims);
  model.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < model.dims.size(); ++l) {
    const std::size_t in = model.dims[l], out = model.dims[l + 1];
    Tensor w({in, out});
    const double stddev = std::sqrt(2.0 / static_cast<double>(in));
    for (double& v : w.values()) v = stddev * rng.normal();
    model.weights.push_back(std::move(w));
    model.biases.emplace_back(Shape{out}, 0.0);
  }
  return model;
}

std::vector<Tensor*> MlpClassifier::parameters() {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

std::vector<const Tensor*> MlpClassifier::parameters() const {
  std::vector<const Tensor*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

namespace {

void check_batch(const MlpClassifier& model, const Tensor& batch) {
  if (batch.rank() != 2 || batch.cols() != model.input_dim()) {
    throw DimensionError("batch " + shape_string(batch.shape()) + " does not match model input width " +
                         std::to_string(model.input_dim()));
  }
}

}  // namespace

Tensor forward_logits(const MlpClassifier& model, const Tensor& batch) {
  check_batch(model, batch);
  Tensor h = batch;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    h = ops::affine(h, model.weights[l], model.biases[l]);
    if (l + 1 < model.num_layers()) h = ops::relu(h);
  }
  require_finite(h, "logits");
  return h;
}

int argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return static_cast<int>(best);
}

std::vector<int> predict(const MlpClassifier& model, const Tensor& batch) {
  const Tensor logits = forward_logits(model, batch);
  std::vector<int> labels(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) labels[i] = argmax(logits.row(i));
  return labels;
}

MlpVars attach(Tape& tape, const MlpClassifier& model, bool requires_grad) {
  MlpVars vars;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    vars.weights.push_back(tape.leaf(model.weights[l], requires_grad));
    vars.biases.push_back(tape.leaf(model.biases[l], requires_grad));
  }
  return vars;
}

Var forward_logits(const MlpVars& vars, Var batch) {
  Var h = batch;
  for (std::size_t l = 0; l < vars.weights.size(); ++l) {
    h = affine(h, vars.weights[l], vars.biases[l]);
    if (l + 1 < vars.weights.size()) h = relu(h);
  }
  return h;
}

}  // namespace cduap
