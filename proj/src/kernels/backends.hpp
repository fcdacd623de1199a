#pragma once

#include <cstddef>

// Internal: per-backend entry points. The public dispatcher in kernels.cpp
// forwards to one of these namespaces.

#define PROPDETECT_KERNEL_DECLS                                               \
  void vexp(const double* x, double* y, size_t n);                           \
  void vtanh(const double* x, double* y, size_t n);                          \
  void vsigmoid(const double* x, double* y, size_t n);                       \
  void gelu(const double* x, double* y, size_t n);                           \
  void gelu_grad(const double* x, const double* dy, double* dx, size_t n);   \
  void axpy(double a, const double* x, double* y, size_t n);                 \
  void scal(double a, double* x, size_t n);                                  \
  void vadd(const double* a, const double* b, double* y, size_t n);          \
  void vmul(const double* a, const double* b, double* y, size_t n);          \
  void radam_update(double* p, const double* g, double* m, double* v,        \
                    size_t n, double beta1, double beta2, double eps,        \
                    double step, bool rectified, double inv_bias1,           \
                    double inv_bias2);                                       \
  double dot(const double* a, const double* b, size_t n);                    \
  double sum(const double* x, size_t n);                                     \
  double maxval(const double* x, size_t n);                                  \
  void matmul(double* c, const double* a, const double* b, size_t m,         \
              size_t k, size_t n, bool accumulate);                          \
  void matmul_nt(double* c, const double* a, const double* b, size_t m,      \
                 size_t k, size_t n, bool accumulate);                       \
  void matmul_tn(double* c, const double* a, const double* b, size_t m,      \
                 size_t k, size_t n, bool accumulate);                       \
  void softmax_rows(double* x, size_t rows, size_t cols);

namespace propdetect::kernels::scalar {
PROPDETECT_KERNEL_DECLS
}

#ifdef PROPDETECT_HAVE_AVX2
namespace propdetect::kernels::avx2 {
PROPDETECT_KERNEL_DECLS
}
#endif
