#pragma once
// Dense double-precision kernels used by the encoder and classifier heads.
//
// Every kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2+FMA variant. The active table is chosen once at startup from CPUID
// and can be pinned to the scalar path (tests, bit-reproducibility across
// machines) with set_active_isa() or the PROBATION_ISA=scalar env var.

#include <cstddef>
#include <string_view>

namespace probation::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[r] += sum_c A[r, c] * x[c]; A is rows x cols, row-major
  void (*gemv)(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols);
  // y[c] += sum_r A[r, c] * x[r]
  void (*gemv_t)(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols);
  // A[r, c] += alpha * x[r] * y[c]
  void (*ger)(double alpha, const double* x, const double* y, double* A, std::size_t rows,
              std::size_t cols);
  // Bias-corrected Adam update over n parameters. Uses no FMA contraction so
  // every ISA produces bit-identical results.
  void (*adam)(double* param, const double* grad, double* m, double* v, std::size_t n, double lr,
               double beta1, double beta2, double eps, double bias_correction1,
               double bias_correction2);
};

const KernelTable& scalar_table();
// nullptr when the binary or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

bool cpu_has_avx2();

const KernelTable& active();
void set_active_isa(Isa isa);
std::string_view isa_name(Isa isa);
Isa parse_isa(std::string_view name);

}  // namespace probation::kernels
