#pragma once

#include <cstddef>

namespace propdetect::kernels {

// Data-parallel inner loops behind the neural stack. Every operation has a
// scalar reference implementation and an AVX2 variant; the backend is picked
// at runtime (CPU detection, overridable for tests and via the
// PROPDETECT_KERNELS environment variable).
//
// Contract between backends:
//   * elementwise ops (vexp, vtanh, vsigmoid, gelu, gelu_grad, axpy, scal,
//     vadd, vmul, radam_update, maxval) produce bit-identical results;
//   * blocked/reduction ops (dot, sum, matmul*, softmax_rows) may reassociate
//     and agree within floating-point tolerance.

enum class Backend { scalar, avx2 };

bool avx2_supported();
Backend active_backend();
void force_backend(Backend b);  // throws ContractError if unsupported
void reset_backend();           // back to auto-detection
const char* backend_name(Backend b);

// ---- elementwise ----
void vexp(const double* x, double* y, size_t n);
void vtanh(const double* x, double* y, size_t n);
void vsigmoid(const double* x, double* y, size_t n);
void gelu(const double* x, double* y, size_t n);
// dx[i] = dy[i] * gelu'(x[i])
void gelu_grad(const double* x, const double* dy, double* dx, size_t n);
// y += a * x
void axpy(double a, const double* x, double* y, size_t n);
void scal(double a, double* x, size_t n);
void vadd(const double* a, const double* b, double* y, size_t n);
void vmul(const double* a, const double* b, double* y, size_t n);

// One rectified-Adam elementwise step over a parameter block:
//   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g*g
//   p -= step * (m*inv_bias1) / (sqrt(v*inv_bias2) + eps)   when rectified
//   p -= step * (m*inv_bias1)                               otherwise
// step already folds in the learning rate and the rectification factor.
void radam_update(double* p, const double* g, double* m, double* v, size_t n,
                  double beta1, double beta2, double eps, double step,
                  bool rectified, double inv_bias1, double inv_bias2);

// ---- reductions / blocked ----
double dot(const double* a, const double* b, size_t n);
double sum(const double* x, size_t n);
double maxval(const double* x, size_t n);  // n >= 1

// Row-major GEMM family. When accumulate is false the output is overwritten.
//   matmul:    c[m,n] (+)= a[m,k] * b[k,n]
//   matmul_nt: c[m,n] (+)= a[m,k] * b[n,k]^T   (b stored n x k)
//   matmul_tn: c[m,n] (+)= a[k,m]^T * b[k,n]   (a stored k x m)
void matmul(double* c, const double* a, const double* b, size_t m, size_t k,
            size_t n, bool accumulate);
void matmul_nt(double* c, const double* a, const double* b, size_t m, size_t k,
               size_t n, bool accumulate);
void matmul_tn(double* c, const double* a, const double* b, size_t m, size_t k,
               size_t n, bool accumulate);

// In-place numerically stable softmax over each row.
void softmax_rows(double* x, size_t rows, size_t cols);

}  // namespace propdetect::kernels
