// Compiled with -mavx2 (and without -mfma). Only reached through the
// dispatch table after a CPU feature check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "cduap/kernels.hpp"

namespace cduap::kernels {
namespace {

constexpr std::size_t kLanes = 4;

void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n) {
  const std::size_t n_vec = n - n % kLanes;
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = a[i * k + p];
      const __m256d sv = _mm256_set1_pd(s);
      const double* brow = b + p * n;
      std::size_t j = 0;
      for (; j < n_vec; j += kLanes) {
        const __m256d prod = _mm256_mul_pd(sv, _mm256_loadu_pd(brow + j));
        _mm256_storeu_pd(crow + j, _mm256_add_pd(_mm256_loadu_pd(crow + j), prod));
      }
      for (; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

void add(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) y[i] += x[i];
}

void relu(const double* x, double* y, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* gy, double* gx, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    const __m256d pass = _mm256_and_pd(mask, _mm256_loadu_pd(gy + i));
    _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), pass));
  }
  for (; i < n; ++i) gx[i] += x[i] > 0.0 ? gy[i] : 0.0;
}

// Operand order mirrors std::min(std::max(x, lo), hi) so signed zeros agree.
void clamp(const double* x, double lo, double hi, double* y, std::size_t n) {
  const __m256d lov = _mm256_set1_pd(lo);
  const __m256d hiv = _mm256_set1_pd(hi);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d lifted = _mm256_max_pd(lov, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_min_pd(hiv, lifted));
  }
  for (; i < n; ++i) y[i] = std::min(std::max(x[i], lo), hi);
}

void clamp_backward(const double* x, double lo, double hi, const double* gy, double* gx,
                    std::size_t n) {
  const __m256d lov = _mm256_set1_pd(lo);
  const __m256d hiv = _mm256_set1_pd(hi);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d inside =
        _mm256_and_pd(_mm256_cmp_pd(xv, lov, _CMP_GE_OQ), _mm256_cmp_pd(xv, hiv, _CMP_LE_OQ));
    const __m256d pass = _mm256_and_pd(inside, _mm256_loadu_pd(gy + i));
    _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), pass));
  }
  for (; i < n; ++i) gx[i] += (x[i] >= lo && x[i] <= hi) ? gy[i] : 0.0;
}

void adam_update(double* param, double* m, double* v, const double* grad, std::size_t n,
                 const AdamCoeffs& c) {
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d omb1 = _mm256_set1_pd(c.one_minus_beta1);
  const __m256d omb2 = _mm256_set1_pd(c.one_minus_beta2);
  const __m256d bc1 = _mm256_set1_pd(c.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(c.bias_correction2);
  const __m256d lr = _mm256_set1_pd(c.learning_rate);
  const __m256d eps = _mm256_set1_pd(c.epsilon);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mv = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(omb1, g));
    const __m256d vv = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
    const __m256d m_hat = _mm256_div_pd(mv, bc1);
    const __m256d v_hat = _mm256_div_pd(vv, bc2);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  for (; i < n; ++i) {
    const double gi = grad[i];
    m[i] = c.beta1 * m[i] + c.one_minus_beta1 * gi;
    v[i] = c.beta2 * v[i] + c.one_minus_beta2 * (gi * gi);
    const double m_hat = m[i] / c.bias_correction1;
    const double v_hat = v[i] / c.bias_correction2;
    param[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

}  // namespace

const KernelTable& avx2_table_unchecked() {
  static const KernelTable table{"avx2", gemm_acc,       add,        relu, relu_backward,
                                 clamp,  clamp_backward, adam_update};
  return table;
}

}  // namespace cduap::kernels
