#include <cmath>
#include <cstring>

#include "propdetect/kernels/scalar_math.hpp"
#include "src/kernels/backends.hpp"

// Reference kernels. Plain ordered loops, no contraction (the build sets
// -ffp-contract=off), so results are reproducible across compilers and serve
// as the equivalence baseline for the AVX2 variants.

namespace propdetect::kernels::scalar {

void vexp(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = fast_exp(x[i]);
}

void vtanh(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = fast_tanh(x[i]);
}

void vsigmoid(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = fast_sigmoid(x[i]);
}

void gelu(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = gelu_scalar(x[i]);
}

void gelu_grad(const double* x, const double* dy, double* dx, size_t n) {
  for (size_t i = 0; i < n; ++i) dx[i] = dy[i] * gelu_grad_scalar(x[i]);
}

void axpy(double a, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal(double a, double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] *= a;
}

void vadd(const double* a, const double* b, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

void vmul(const double* a, const double* b, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

void radam_update(double* p, const double* g, double* m, double* v, size_t n,
                  double beta1, double beta2, double eps, double step,
                  bool rectified, double inv_bias1, double inv_bias2) {
  for (size_t i = 0; i < n; ++i) {
    double gi = g[i];
    double mi = beta1 * m[i] + (1.0 - beta1) * gi;
    double vi = beta2 * v[i] + (1.0 - beta2) * (gi * gi);
    m[i] = mi;
    v[i] = vi;
    double mhat = mi * inv_bias1;
    if (rectified) {
      double denom = std::sqrt(vi * inv_bias2) + eps;
      p[i] -= step * (mhat / denom);
    } else {
      p[i] -= step * mhat;
    }
  }
}

double dot(const double* a, const double* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum(const double* x, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double maxval(const double* x, size_t n) {
  double m = x[0];
  for (size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

void matmul(double* c, const double* a, const double* b, size_t m, size_t k,
            size_t n, bool accumulate) {
  if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
  for (size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (size_t p = 0; p < k; ++p) {
      double av = ai[p];
      const double* bp = b + p * n;
      for (size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_nt(double* c, const double* a, const double* b, size_t m, size_t k,
               size_t n, bool accumulate) {
  if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
  for (size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

void matmul_tn(double* c, const double* a, const double* b, size_t m, size_t k,
               size_t n, bool accumulate) {
  if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
  for (size_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (size_t i = 0; i < m; ++i) {
      double av = ap[i];
      double* ci = c + i * n;
      for (size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void softmax_rows(double* x, size_t rows, size_t cols) {
  for (size_t r = 0; r < rows; ++r) {
    double* row = x + r * cols;
    double mx = maxval(row, cols);
    double s = 0.0;
    for (size_t j = 0; j < cols; ++j) {
      row[j] = fast_exp(row[j] - mx);
      s += row[j];
    }
    for (size_t j = 0; j < cols; ++j) row[j] /= s;
  }
}

}  // namespace propdetect::kernels::scalar
