#include <algorithm>
#include <cmath>

#include "cduap/kernels.hpp"

namespace cduap::kernels {
namespace {

void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = a[i * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

void add(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

void relu(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* gy, double* gx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) gx[i] += x[i] > 0.0 ? gy[i] : 0.0;
}

void clamp(const double* x, double lo, double hi, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::min(std::max(x[i], lo), hi);
}

void clamp_backward(const double* x, double lo, double hi, const double* gy, double* gx,
                    std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) gx[i] += (x[i] >= lo && x[i] <= hi) ? gy[i] : 0.0;
}

void adam_update(double* param, double* m, double* v, const double* grad, std::size_t n,
                 const AdamCoeffs& c) {
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + c.one_minus_beta1 * g;
    v[i] = c.beta2 * v[i] + c.one_minus_beta2 * (g * g);
    const double m_hat = m[i] / c.bias_correction1;
    const double v_hat = v[i] / c.bias_correction2;
    param[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", gemm_acc,       add,        relu, relu_backward,
                                 clamp,    clamp_backward, adam_update};
  return table;
}

}  // namespace cduap::kernels
