#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cduap/autodiff.hpp"
#include "cduap/tensor.hpp"

namespace cduap {

// Fully connected classifier: relu between hidden layers, raw logits out.
struct MlpClassifier {
  std::vector<std::size_t> dims;  // [d, h1, ..., C]
  std::vector<Tensor> weights;    // weights[l] is dims[l] x dims[l+1]
  std::vector<Tensor> biases;     // biases[l] has dims[l+1] entries
  std::uint64_t seed = 0;

  // He-normal weights, zero biases.
  static MlpClassifier init(std::vector<std::size_t> dims, std::uint64_t seed);

  std::size_t input_dim() const { return dims.front(); }
  std::size_t num_classes() const { return dims.back(); }
  std::size_t num_layers() const { return weights.size(); }

  // W0, b0, W1, b1, ...
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  friend bool operator==(const MlpClassifier&, const MlpClassifier&) = default;
};

Tensor forward_logits(const MlpClassifier& model, const Tensor& batch);

// Index of the largest entry; ties resolve to the lowest index.
int argmax(std::span<const double> row);

std::vector<int> predict(const MlpClassifier& model, const Tensor& batch);

// The model's parameters placed on a tape.
struct MlpVars {
  std::vector<Var> weights;
  std::vector<Var> biases;
};

MlpVars attach(Tape& tape, const MlpClassifier& model, bool requires_grad);
Var forward_logits(const MlpVars& vars, Var batch);

}  // namespace cduap
