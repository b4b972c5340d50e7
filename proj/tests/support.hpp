#pragma once

// Independent oracles and shared fixtures for the unit tests. Nothing here
// calls into the library's tensor kernels, so the checks are not circular.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string_view>
#include <vector>

#include "cduap/config.hpp"
#include "cduap/data.hpp"
#include "cduap/losses.hpp"
#include "cduap/mlp.hpp"
#include "cduap/pipeline.hpp"
#include "cduap/random.hpp"
#include "cduap/tensor.hpp"

namespace testing {

using cduap::Tensor;

inline Tensor random_matrix(cduap::Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  Tensor t({rows, cols});
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline Tensor random_vector(cduap::Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  Tensor t({n});
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor c({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a.at(i, k) * b.at(k, j);
      c.at(i, j) = s;
    }
  return c;
}

// Plain-loop forward pass of an MLP.
inline std::vector<double> oracle_logits(const cduap::MlpClassifier& m, std::vector<double> x) {
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const Tensor& w = m.weights[l];
    std::vector<double> y(w.cols());
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = m.biases[l][j];
      for (std::size_t k = 0; k < w.rows(); ++k) s += x[k] * w.at(k, j);
      y[j] = (l + 1 < m.weights.size()) ? std::max(s, 0.0) : s;
    }
    x = std::move(y);
  }
  return x;
}

// Per-row targeted loss term written out from the definitions.
inline double oracle_term(cduap::LossKind kind, const std::vector<double>& z, int c) {
  using cduap::LossKind;
  switch (kind) {
    case LossKind::CE: {
      const double mx = *std::max_element(z.begin(), z.end());
      double s = 0.0;
      for (double v : z) s += std::exp(v - mx);
      return z[c] - mx - std::log(s);
    }
    case LossKind::Logit:
      return z[c];
    case LossKind::BoundedLogit: {
      double other = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < z.size(); ++i)
        if (static_cast<int>(i) != c) other = std::max(other, z[i]);
      return std::max(z[c] - other, 0.0);
    }
    case LossKind::Absent:
      return 0.0;
  }
  return 0.0;
}

// Mean loss of the branch on clamp(x + delta).
inline double oracle_branch(const cduap::MlpClassifier& m, cduap::LossKind kind, const Tensor& x,
                            const std::vector<int>& labels, const std::vector<double>& delta,
                            cduap::FeatureBounds b, bool clamp_inputs = true) {
  double s = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::vector<double> in(x.cols());
    for (std::size_t k = 0; k < x.cols(); ++k) {
      in[k] = x.at(r, k) + delta[k];
      if (clamp_inputs) in[k] = std::min(std::max(in[k], b.lo), b.hi);
    }
    s += oracle_term(kind, oracle_logits(m, in), labels[r]);
  }
  return s / static_cast<double>(x.rows());
}

inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i, double h = 1e-5) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

// Relative error with an absolute floor for values near zero.
inline bool gradient_close(double analytic, double numeric, double rel = 1e-4, double abs_floor = 1e-7) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_floor) return true;
  return diff <= rel * std::max(std::abs(analytic), std::abs(numeric));
}

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

// The reference benchmark: 10-class blobs, d=32, 500/100 per class, the
// default [32, 64, 64, 10] victim trained with seed 0.
struct Reference {
  cduap::ExperimentConfig config;
  cduap::LabeledDataset train;
  cduap::LabeledDataset test;
  cduap::MlpClassifier model;
  cduap::LabeledDataset train_correct;
  double test_accuracy = 0.0;
};

inline const Reference& reference() {
  static const Reference ref = [] {
    Reference r;
    auto [train, test] = cduap::make_datasets(r.config.data);
    r.train = std::move(train);
    r.test = std::move(test);
    r.model = cduap::train_victim(r.config, r.train, r.test, r.config.model.seed).model;
    r.train_correct = cduap::filter_correct(r.model, r.train);
    std::size_t hits = 0;
    const auto pred = cduap::predict(r.model, r.test.features);
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == r.test.labels[i];
    r.test_accuracy = static_cast<double>(hits) / static_cast<double>(pred.size());
    return r;
  }();
  return ref;
}

}  // namespace testing
