#pragma once

// Data-parallel inner loops behind the tensor operations.
//
// Every backend must produce bit-identical results to the scalar reference:
// accumulation order is fixed (ascending over the reduced index), and no
// backend fuses multiply-add. This keeps crafted perturbations and golden
// values independent of the CPU the code happens to run on.

#include <cstddef>
#include <string_view>
#include <vector>

namespace cduap::kernels {

struct AdamCoeffs {
  double beta1;
  double beta2;
  double one_minus_beta1;
  double one_minus_beta2;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
  double learning_rate;
  double epsilon;
};

struct KernelTable {
  std::string_view name;
  // c[m x n] += a[m x k] * b[k x n], all row-major. For each output element
  // the products are added in ascending k.
  void (*gemm_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n);
  // y[i] += x[i]
  void (*add)(const double* x, double* y, std::size_t n);
  // y[i] = max(x[i], 0)
  void (*relu)(const double* x, double* y, std::size_t n);
  // gx[i] += x[i] > 0 ? gy[i] : 0
  void (*relu_backward)(const double* x, const double* gy, double* gx, std::size_t n);
  // y[i] = min(max(x[i], lo), hi)
  void (*clamp)(const double* x, double lo, double hi, double* y, std::size_t n);
  // gx[i] += lo <= x[i] <= hi ? gy[i] : 0
  void (*clamp_backward)(const double* x, double lo, double hi, const double* gy, double* gx,
                         std::size_t n);
  // In-place bias-corrected ADAM update of one parameter block.
  void (*adam_update)(double* param, double* m, double* v, const double* grad, std::size_t n,
                      const AdamCoeffs& coeffs);
};

const KernelTable& scalar_table();

// nullptr when the build has no AVX2 variant or the CPU lacks AVX2.
const KernelTable* avx2_table();

// Backend in use. Chosen once from the CPU features; CDUAP_KERNELS=scalar|avx2
// in the environment overrides the choice.
const KernelTable& active();

// Every backend usable on this machine, scalar first.
std::vector<const KernelTable*> available();

// Test hook: force a backend for the rest of the process.
void set_active(const KernelTable& table);

}  // namespace cduap::kernels
