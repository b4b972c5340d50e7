#include "cduap/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cduap/errors.hpp"
#include "cduap/kernels.hpp"

namespace cduap {

const Tensor& Var::value() const {
  if (!tape) throw UsageError("variable is not attached to a tape");
  return tape->value(*this);
}

const Tensor& Gradients::operator[](Var leaf) const {
  if (leaf.id >= per_node_.size() || !per_node_[leaf.id]) {
    throw UsageError("no gradient recorded for node " + std::to_string(leaf.id));
  }
  return *per_node_[leaf.id];
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.is_leaf = true;
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  require_finite(value, "forward pass");
  Node node;
  node.value = std::move(value);
  node.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                   [this](std::size_t id) { return nodes_[id].requires_grad; });
  node.inputs = std::move(inputs);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Tape::check_owned(Var v) const {
  if (v.tape != this || v.id >= nodes_.size()) throw UsageError("variable does not belong to this tape");
}

const Tensor& Tape::value(Var v) const {
  check_owned(v);
  return nodes_[v.id].value;
}

bool Tape::requires_grad(Var v) const {
  check_owned(v);
  return nodes_[v.id].requires_grad;
}

Gradients Tape::backward(Var scalar) const {
  if (scalar.tape != this || scalar.id >= nodes_.size()) {
    throw UsageError("backward: scalar is not on this tape");
  }
  if (nodes_[scalar.id].value.size() != 1) {
    throw UsageError("backward: expected a single-element tensor, got shape " +
                     shape_string(nodes_[scalar.id].value.shape()));
  }

  std::vector<std::optional<Tensor>> grads(nodes_.size());
  if (nodes_[scalar.id].requires_grad) {
    grads[scalar.id] = Tensor(nodes_[scalar.id].value.shape(), 1.0);
  }
  std::vector<Tensor*> grad_in;
  for (std::size_t id = scalar.id + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (node.is_leaf || !node.requires_grad || !grads[id]) continue;
    grad_in.assign(node.inputs.size(), nullptr);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const std::size_t in = node.inputs[k];
      if (!nodes_[in].requires_grad) continue;
      if (!grads[in]) grads[in] = Tensor(nodes_[in].value.shape(), 0.0);
      grad_in[k] = &*grads[in];
    }
    node.backward(*this, *grads[id], grad_in);
  }

  // Keep only leaf gradients; unreached leaves get zeros.
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& node = nodes_[id];
    if (node.is_leaf && node.requires_grad) {
      if (!grads[id]) grads[id] = Tensor(node.value.shape(), 0.0);
    } else {
      grads[id].reset();
    }
  }
  return Gradients(std::move(grads));
}

namespace ops {

namespace {

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw DimensionError(std::string(what) + " must be a matrix, got " + shape_string(t.shape()));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul lhs");
  require_matrix(b, "matmul rhs");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  Tensor out({a.rows(), b.cols()});
  kernels::active().gemm_acc(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols());
  return out;
}

Tensor transpose(const Tensor& m) {
  require_matrix(m, "transpose input");
  Tensor out({m.cols(), m.rows()});
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out.at(c, r) = m.at(r, c);
  }
  return out;
}

Tensor affine(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (input.rank() != 2 || weight.rank() != 2 || bias.rank() != 1 || input.cols() != weight.rows() ||
      bias.size() != weight.cols()) {
    throw DimensionError("affine: input " + shape_string(input.shape()) + ", weight " +
                         shape_string(weight.shape()) + ", bias " + shape_string(bias.shape()));
  }
  const std::size_t b = input.rows();
  const std::size_t n = weight.cols();
  Tensor out({b, n});
  for (std::size_t i = 0; i < b; ++i) std::copy(bias.data(), bias.data() + n, out.row(i).begin());
  // Bias first, then products in ascending k: out = b + sum_k x_k w_k.
  kernels::active().gemm_acc(input.data(), weight.data(), out.data(), b, input.cols(), n);
  return out;
}

Tensor add_row(const Tensor& input, const Tensor& row) {
  if (input.rank() != 2 || row.size() != input.cols()) {
    throw DimensionError("add_row: input " + shape_string(input.shape()) + ", row " + shape_string(row.shape()));
  }
  Tensor out = input;
  for (std::size_t i = 0; i < out.rows(); ++i) kernels::active().add(row.data(), out.row(i).data(), row.size());
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  kernels::active().relu(input.data(), out.data(), input.size());
  return out;
}

Tensor clamp(const Tensor& input, double lo, double hi) {
  Tensor out(input.shape());
  kernels::active().clamp(input.data(), lo, hi, out.data(), input.size());
  return out;
}

Tensor log_softmax(const Tensor& logits) {
  require_matrix(logits, "log_softmax input");
  if (logits.cols() < 2) throw DimensionError("log_softmax needs at least 2 classes, got " + shape_string(logits.shape()));
  Tensor out(logits.shape());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    const double top = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - top);
    const double lse = top + std::log(sum);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) dst[j] = row[j] - lse;
  }
  return out;
}

}  // namespace ops

namespace {

Tape& common_tape(Var a, Var b) {
  if (!a.tape || a.tape != b.tape) throw UsageError("operands live on different tapes");
  return *a.tape;
}

Tape& tape_of(Var a) {
  if (!a.tape) throw UsageError("variable is not attached to a tape");
  return *a.tape;
}

void check_labels(const Tensor& logits, std::span<const int> labels, const char* what) {
  if (logits.rank() != 2 || labels.size() != logits.rows()) {
    throw DimensionError(std::string(what) + ": " + shape_string(logits.shape()) + " with " +
                         std::to_string(labels.size()) + " labels");
  }
  for (int c : labels) {
    if (c < 0 || static_cast<std::size_t>(c) >= logits.cols()) {
      throw DimensionError(std::string(what) + ": label " + std::to_string(c) + " out of range");
    }
  }
}

}  // namespace

Var affine(Var input, Var weight, Var bias) {
  Tape& tape = common_tape(input, weight);
  common_tape(weight, bias);
  Tensor out = ops::affine(input.value(), weight.value(), bias.value());
  return tape.record(std::move(out), {input.id, weight.id, bias.id},
                     [x_id = input.id, w_id = weight.id](const Tape& t, const Tensor& gy,
                                                         std::span<Tensor* const> g) {
                       const Tensor& x = t.value(x_id);
                       const Tensor& w = t.value(w_id);
                       const auto& k = kernels::active();
                       const std::size_t b = x.rows(), m = x.cols(), n = w.cols();
                       if (g[0]) {
                         const Tensor wt = ops::transpose(w);
                         k.gemm_acc(gy.data(), wt.data(), g[0]->data(), b, n, m);
                       }
                       if (g[1]) {
                         const Tensor xt = ops::transpose(x);
                         k.gemm_acc(xt.data(), gy.data(), g[1]->data(), m, b, n);
                       }
                       if (g[2]) {
                         for (std::size_t i = 0; i < b; ++i) k.add(gy.row(i).data(), g[2]->data(), n);
                       }
                     });
}

Var add_row(Var input, Var row) {
  Tape& tape = common_tape(input, row);
  Tensor out = ops::add_row(input.value(), row.value());
  return tape.record(std::move(out), {input.id, row.id},
                     [](const Tape&, const Tensor& gy, std::span<Tensor* const> g) {
                       const auto& k = kernels::active();
                       if (g[0]) k.add(gy.data(), g[0]->data(), gy.size());
                       if (g[1]) {
                         for (std::size_t i = 0; i < gy.rows(); ++i) k.add(gy.row(i).data(), g[1]->data(), gy.cols());
                       }
                     });
}

Var relu(Var input) {
  Tape& tape = tape_of(input);
  return tape.record(ops::relu(input.value()), {input.id},
                     [x_id = input.id](const Tape& t, const Tensor& gy, std::span<Tensor* const> g) {
                       kernels::active().relu_backward(t.value(x_id).data(), gy.data(), g[0]->data(), gy.size());
                     });
}

Var clamp(Var input, double lo, double hi) {
  Tape& tape = tape_of(input);
  return tape.record(ops::clamp(input.value(), lo, hi), {input.id},
                     [x_id = input.id, lo, hi](const Tape& t, const Tensor& gy, std::span<Tensor* const> g) {
                       kernels::active().clamp_backward(t.value(x_id).data(), lo, hi, gy.data(), g[0]->data(),
                                                        gy.size());
                     });
}

Var log_softmax(Var logits) {
  Tape& tape = tape_of(logits);
  Tensor out = ops::log_softmax(logits.value());
  const std::size_t out_id = tape.size();
  return tape.record(std::move(out), {logits.id},
                     [out_id](const Tape& t, const Tensor& gy, std::span<Tensor* const> g) {
                       // d/dx_j = gy_j - softmax_j * sum_k gy_k
                       const Tensor& y = t.value(out_id);
                       for (std::size_t i = 0; i < y.rows(); ++i) {
                         const auto yr = y.row(i);
                         const auto gr = gy.row(i);
                         double total = 0.0;
                         for (double v : gr) total += v;
                         auto dst = g[0]->row(i);
                         for (std::size_t j = 0; j < yr.size(); ++j) dst[j] += gr[j] - std::exp(yr[j]) * total;
                       }
                     });
}

Var pick(Var input, std::span<const int> labels) {
  Tape& tape = tape_of(input);
  const Tensor& x = input.value();
  check_labels(x, labels, "pick");
  Tensor out({x.rows()});
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = x.at(i, static_cast<std::size_t>(labels[i]));
  return tape.record(std::move(out), {input.id},
                     [cls = std::vector<int>(labels.begin(), labels.end())](
                         const Tape&, const Tensor& gy, std::span<Tensor* const> g) {
                       for (std::size_t i = 0; i < cls.size(); ++i) {
                         g[0]->at(i, static_cast<std::size_t>(cls[i])) += gy[i];
                       }
                     });
}

Var margin_hinge(Var logits, std::span<const int> labels) {
  Tape& tape = tape_of(logits);
  const Tensor& x = logits.value();
  check_labels(x, labels, "margin_hinge");
  if (x.cols() < 2) throw DimensionError("margin_hinge needs at least 2 classes");
  const std::size_t b = x.rows();
  Tensor out({b});
  // Per row: the runner-up index, or npos when the hinge is inactive.
  std::vector<std::size_t> runner_up(b, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < b; ++i) {
    const auto row = x.row(i);
    const auto c = static_cast<std::size_t>(labels[i]);
    std::size_t best = c == 0 ? 1 : 0;
    for (std::size_t j = best + 1; j < row.size(); ++j) {
      if (j != c && row[j] > row[best]) best = j;
    }
    const double s = row[c] - row[best];
    out[i] = s > 0.0 ? s : 0.0;
    if (s > 0.0) runner_up[i] = best;
  }
  return tape.record(std::move(out), {logits.id},
                     [cls = std::vector<int>(labels.begin(), labels.end()), runner_up = std::move(runner_up)](
                         const Tape&, const Tensor& gy, std::span<Tensor* const> g) {
                       for (std::size_t i = 0; i < cls.size(); ++i) {
                         if (runner_up[i] == std::numeric_limits<std::size_t>::max()) continue;
                         g[0]->at(i, static_cast<std::size_t>(cls[i])) += gy[i];
                         g[0]->at(i, runner_up[i]) -= gy[i];
                       }
                     });
}

Var mean(Var input) {
  Tape& tape = tape_of(input);
  const Tensor& x = input.value();
  if (x.size() == 0) throw UsageError("mean of an empty tensor");
  double sum = 0.0;
  for (double v : x.values()) sum += v;
  const double n = static_cast<double>(x.size());
  return tape.record(Tensor::scalar(sum / n), {input.id},
                     [n](const Tape&, const Tensor& gy, std::span<Tensor* const> g) {
                       const double share = gy[0] / n;
                       for (double& v : g[0]->values()) v += share;
                     });
}

Var scale(Var input, double factor) {
  Tape& tape = tape_of(input);
  Tensor out = input.value();
  for (double& v : out.values()) v *= factor;
  return tape.record(std::move(out), {input.id},
                     [factor](const Tape&, const Tensor& gy, std::span<Tensor* const> g) {
                       for (std::size_t i = 0; i < gy.size(); ++i) (*g[0])[i] += factor * gy[i];
                     });
}

Var add(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  if (a.value().shape() != b.value().shape()) {
    throw DimensionError("add: " + shape_string(a.value().shape()) + " vs " + shape_string(b.value().shape()));
  }
  Tensor out = a.value();
  kernels::active().add(b.value().data(), out.data(), out.size());
  return tape.record(std::move(out), {a.id, b.id},
                     [](const Tape&, const Tensor& gy, std::span<Tensor* const> g) {
                       for (Tensor* acc : g) {
                         if (acc) kernels::active().add(gy.data(), acc->data(), gy.size());
                       }
                     });
}

}  // namespace cduap
