#include "propdetect/kernels/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "propdetect/util/errors.hpp"
#include "src/kernels/backends.hpp"

namespace propdetect::kernels {

namespace {

Backend detect() {
  Backend preferred = avx2_supported() ? Backend::avx2 : Backend::scalar;
  if (const char* env = std::getenv("PROPDETECT_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && avx2_supported())
      return Backend::avx2;
  }
  return preferred;
}

std::atomic<Backend>& state() {
  static std::atomic<Backend> b{detect()};
  return b;
}

}  // namespace

bool avx2_supported() {
#ifdef PROPDETECT_HAVE_AVX2
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active_backend() {
  return state().load(std::memory_order_relaxed);
}

void force_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_supported())
    throw ContractError("AVX2 kernel backend is not available on this CPU");
  state().store(b, std::memory_order_relaxed);
}

void reset_backend() { state().store(detect(), std::memory_order_relaxed); }

const char* backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

#ifdef PROPDETECT_HAVE_AVX2
#define PROPDETECT_DISPATCH(fn, ...)                       \
  do {                                                     \
    if (active_backend() == Backend::avx2)                 \
      return avx2::fn(__VA_ARGS__);                        \
    return scalar::fn(__VA_ARGS__);                        \
  } while (0)
#else
#define PROPDETECT_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

void vexp(const double* x, double* y, size_t n) {
  PROPDETECT_DISPATCH(vexp, x, y, n);
}

void vtanh(const double* x, double* y, size_t n) {
  PROPDETECT_DISPATCH(vtanh, x, y, n);
}

void vsigmoid(const double* x, double* y, size_t n) {
  PROPDETECT_DISPATCH(vsigmoid, x, y, n);
}

void gelu(const double* x, double* y, size_t n) {
  PROPDETECT_DISPATCH(gelu, x, y, n);
}

void gelu_grad(const double* x, const double* dy, double* dx, size_t n) {
  PROPDETECT_DISPATCH(gelu_grad, x, dy, dx, n);
}

void axpy(double a, const double* x, double* y, size_t n) {
  PROPDETECT_DISPATCH(axpy, a, x, y, n);
}

void scal(double a, double* x, size_t n) {
  PROPDETECT_DISPATCH(scal, a, x, n);
}

void vadd(const double* a, const double* b, double* y, size_t n) {
  PROPDETECT_DISPATCH(vadd, a, b, y, n);
}

void vmul(const double* a, const double* b, double* y, size_t n) {
  PROPDETECT_DISPATCH(vmul, a, b, y, n);
}

void radam_update(double* p, const double* g, double* m, double* v, size_t n,
                  double beta1, double beta2, double eps, double step,
                  bool rectified, double inv_bias1, double inv_bias2) {
  PROPDETECT_DISPATCH(radam_update, p, g, m, v, n, beta1, beta2, eps, step,
                      rectified, inv_bias1, inv_bias2);
}

double dot(const double* a, const double* b, size_t n) {
  PROPDETECT_DISPATCH(dot, a, b, n);
}

double sum(const double* x, size_t n) { PROPDETECT_DISPATCH(sum, x, n); }

double maxval(const double* x, size_t n) { PROPDETECT_DISPATCH(maxval, x, n); }

void matmul(double* c, const double* a, const double* b, size_t m, size_t k,
            size_t n, bool accumulate) {
  PROPDETECT_DISPATCH(matmul, c, a, b, m, k, n, accumulate);
}

void matmul_nt(double* c, const double* a, const double* b, size_t m, size_t k,
               size_t n, bool accumulate) {
  PROPDETECT_DISPATCH(matmul_nt, c, a, b, m, k, n, accumulate);
}

void matmul_tn(double* c, const double* a, const double* b, size_t m, size_t k,
               size_t n, bool accumulate) {
  PROPDETECT_DISPATCH(matmul_tn, c, a, b, m, k, n, accumulate);
}

void softmax_rows(double* x, size_t rows, size_t cols) {
  PROPDETECT_DISPATCH(softmax_rows, x, rows, cols);
}

#undef PROPDETECT_DISPATCH

}  // namespace propdetect::kernels
