#pragma once

// Reverse-mode differentiation over a per-forward-pass tape.
//
// A Tape owns the values of every node it records. Nodes are appended in
// evaluation order, so the record is topologically sorted by construction and
// backward() is a single reverse sweep. Nodes whose inputs all lack
// requires_grad are tracked as constants and skipped during the sweep.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cduap/tensor.hpp"

namespace cduap {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
};

class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(std::vector<std::optional<Tensor>> per_node) : per_node_(std::move(per_node)) {}

  // Gradient for a leaf recorded with requires_grad; throws UsageError otherwise.
  const Tensor& operator[](Var leaf) const;

 private:
  std::vector<std::optional<Tensor>> per_node_;
};

class Tape {
 public:
  // Receives the tape (for input values), the upstream gradient of the node,
  // and one accumulator per input; accumulators are null for inputs that do
  // not require gradients.
  using BackwardFn =
      std::function<void(const Tape&, const Tensor& grad_out, std::span<Tensor* const> grad_in)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Gradients of a single-element node with respect to every leaf that
  // requires them. Leaves not on any path receive zeros.
  Gradients backward(Var scalar) const;

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_leaf = false;
  };

  void check_owned(Var v) const;

  std::vector<Node> nodes_;
};

// Forward-only tensor operations. These are what the tape ops evaluate.
namespace ops {

// input[b x m] * weight[m x n] + bias[n]
Tensor affine(const Tensor& input, const Tensor& weight, const Tensor& bias);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& m);
// Adds a row vector to every row of a matrix.
Tensor add_row(const Tensor& input, const Tensor& row);
Tensor relu(const Tensor& input);
Tensor clamp(const Tensor& input, double lo, double hi);
// Row-wise, stabilized by subtracting the row maximum.
Tensor log_softmax(const Tensor& logits);

}  // namespace ops

// Tape-recording operations.
Var affine(Var input, Var weight, Var bias);
Var add_row(Var input, Var row);
Var relu(Var input);
Var clamp(Var input, double lo, double hi);
Var log_softmax(Var logits);
// out[i] = input[i][labels[i]]
Var pick(Var input, std::span<const int> labels);
// out[i] = max(input[i][c] - max_{j != c} input[i][j], 0) with c = labels[i].
// Zero subgradient at the kink; ties for the runner-up go to the lowest index.
Var margin_hinge(Var logits, std::span<const int> labels);
Var mean(Var input);
Var scale(Var input, double factor);
Var add(Var a, Var b);

}  // namespace cduap
