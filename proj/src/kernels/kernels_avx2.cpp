// AVX2 + FMA kernel variants. This TU is compiled with -mavx2 -mfma and only
// linked when the toolchain supports it; runtime dispatch keeps it cold on
// machines without AVX2.
//
// Elementwise kernels replicate the scalar backend's operation order lane by
// lane (no fused ops where the scalar path has none), so they are
// bit-identical with the reference. GEMM and reductions use FMA and multiple
// accumulators and agree within tolerance.

#ifdef PROPDETECT_HAVE_AVX2

#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "propdetect/kernels/scalar_math.hpp"
#include "src/kernels/backends.hpp"

namespace propdetect::kernels::avx2 {

namespace {

using detail::kC1;
using detail::kC2;
using detail::kExpHi;
using detail::kExpLo;
using detail::kLog2E;

inline __m256d exp4(__m256d x0) {
  const __m256d log2e = _mm256_set1_pd(kLog2E);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d c1 = _mm256_set1_pd(kC1);
  const __m256d c2 = _mm256_set1_pd(kC2);

  __m256d n = _mm256_floor_pd(
      _mm256_add_pd(_mm256_mul_pd(log2e, x0), half));
  __m256d x = _mm256_sub_pd(x0, _mm256_mul_pd(n, c1));
  x = _mm256_sub_pd(x, _mm256_mul_pd(n, c2));

  __m256d xx = _mm256_mul_pd(x, x);
  __m256d px = _mm256_add_pd(
      _mm256_mul_pd(_mm256_set1_pd(detail::kP0), xx),
      _mm256_set1_pd(detail::kP1));
  px = _mm256_add_pd(_mm256_mul_pd(px, xx), _mm256_set1_pd(detail::kP2));
  px = _mm256_mul_pd(x, px);
  __m256d qx = _mm256_add_pd(
      _mm256_mul_pd(_mm256_set1_pd(detail::kQ0), xx),
      _mm256_set1_pd(detail::kQ1));
  qx = _mm256_add_pd(_mm256_mul_pd(qx, xx), _mm256_set1_pd(detail::kQ2));
  qx = _mm256_add_pd(_mm256_mul_pd(qx, xx), _mm256_set1_pd(detail::kQ3));
  __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  e = _mm256_add_pd(_mm256_set1_pd(1.0),
                    _mm256_mul_pd(_mm256_set1_pd(2.0), e));

  // 2^n through the exponent field; out-of-range lanes are blended away.
  __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  __m256i bits = _mm256_slli_epi64(
      _mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  __m256d scale = _mm256_castsi256_pd(bits);
  __m256d r = _mm256_mul_pd(e, scale);

  __m256d lo_mask = _mm256_cmp_pd(x0, _mm256_set1_pd(kExpLo), _CMP_LT_OQ);
  __m256d hi_mask = _mm256_cmp_pd(x0, _mm256_set1_pd(kExpHi), _CMP_GT_OQ);
  r = _mm256_blendv_pd(r, _mm256_setzero_pd(), lo_mask);
  r = _mm256_blendv_pd(r, _mm256_set1_pd(HUGE_VAL), hi_mask);
  return r;
}

const __m256d kSignMask = _mm256_set1_pd(-0.0);

inline __m256d tanh4(__m256d x) {
  __m256d ax = _mm256_andnot_pd(kSignMask, x);
  __m256d u = exp4(_mm256_mul_pd(_mm256_set1_pd(-2.0), ax));
  __m256d one = _mm256_set1_pd(1.0);
  __m256d t = _mm256_div_pd(_mm256_sub_pd(one, u), _mm256_add_pd(one, u));
  __m256d neg = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_LT_OQ);
  return _mm256_blendv_pd(t, _mm256_xor_pd(t, kSignMask), neg);
}

inline __m256d sigmoid4(__m256d x) {
  __m256d u = exp4(_mm256_xor_pd(x, kSignMask));
  __m256d one = _mm256_set1_pd(1.0);
  return _mm256_div_pd(one, _mm256_add_pd(one, u));
}

inline __m256d gelu4(__m256d x) {
  const __m256d c0 = _mm256_set1_pd(detail::kGeluC0);
  const __m256d c1 = _mm256_set1_pd(detail::kGeluC1);
  __m256d xx = _mm256_mul_pd(x, x);
  __m256d xxx = _mm256_mul_pd(xx, x);
  __m256d u = _mm256_mul_pd(c0, _mm256_add_pd(x, _mm256_mul_pd(c1, xxx)));
  __m256d t = tanh4(u);
  __m256d hx = _mm256_mul_pd(_mm256_set1_pd(0.5), x);
  return _mm256_mul_pd(hx, _mm256_add_pd(_mm256_set1_pd(1.0), t));
}

inline __m256d gelu_grad4(__m256d x) {
  const __m256d c0 = _mm256_set1_pd(detail::kGeluC0);
  const __m256d c1 = _mm256_set1_pd(detail::kGeluC1);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half = _mm256_set1_pd(0.5);
  __m256d x2 = _mm256_mul_pd(x, x);
  __m256d u = _mm256_mul_pd(
      c0, _mm256_add_pd(x, _mm256_mul_pd(c1, _mm256_mul_pd(x, x2))));
  __m256d t = tanh4(u);
  __m256d du = _mm256_mul_pd(
      c0, _mm256_add_pd(one, _mm256_mul_pd(
                                 _mm256_set1_pd(3.0 * detail::kGeluC1), x2)));
  __m256d a = _mm256_mul_pd(half, _mm256_add_pd(one, t));
  __m256d b = _mm256_mul_pd(
      _mm256_mul_pd(_mm256_mul_pd(half, x),
                    _mm256_sub_pd(one, _mm256_mul_pd(t, t))),
      du);
  return _mm256_add_pd(a, b);
}

// Horizontal sums of four accumulators into one vector [s0,s1,s2,s3].
inline __m256d hsum4(__m256d a0, __m256d a1, __m256d a2, __m256d a3) {
  __m256d t1 = _mm256_hadd_pd(a0, a1);
  __m256d t2 = _mm256_hadd_pd(a2, a3);
  __m256d lo = _mm256_permute2f128_pd(t1, t2, 0x20);
  __m256d hi = _mm256_permute2f128_pd(t1, t2, 0x31);
  return _mm256_add_pd(lo, hi);
}

inline double hsum1(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(s, s);
  return _mm_cvtsd_f64(_mm_add_sd(s, sh));
}

}  // namespace

void vexp(const double* x, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, exp4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = fast_exp(x[i]);
}

void vtanh(const double* x, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, tanh4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = fast_tanh(x[i]);
}

void vsigmoid(const double* x, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, sigmoid4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = fast_sigmoid(x[i]);
}

void gelu(const double* x, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, gelu4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = gelu_scalar(x[i]);
}

void gelu_grad(const double* x, const double* dy, double* dx, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d g = gelu_grad4(_mm256_loadu_pd(x + i));
    _mm256_storeu_pd(dx + i, _mm256_mul_pd(_mm256_loadu_pd(dy + i), g));
  }
  for (; i < n; ++i) dx[i] = dy[i] * gelu_grad_scalar(x[i]);
}

void axpy(double a, const double* x, double* y, size_t n) {
  // mul + add (not fma) to stay bit-identical with the scalar path
  __m256d av = _mm256_set1_pd(a);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_add_pd(_mm256_loadu_pd(y + i),
                              _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scal(double a, double* x, size_t n) {
  __m256d av = _mm256_set1_pd(a);
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void vadd(const double* a, const double* b, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        y + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) y[i] = a[i] + b[i];
}

void vmul(const double* a, const double* b, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        y + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) y[i] = a[i] * b[i];
}

void radam_update(double* p, const double* g, double* m, double* v, size_t n,
                  double beta1, double beta2, double eps, double step,
                  bool rectified, double inv_bias1, double inv_bias2) {
  const __m256d b1 = _mm256_set1_pd(beta1);
  const __m256d b2 = _mm256_set1_pd(beta2);
  const __m256d ob1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d ob2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d ib1 = _mm256_set1_pd(inv_bias1);
  const __m256d ib2 = _mm256_set1_pd(inv_bias2);
  const __m256d ev = _mm256_set1_pd(eps);
  const __m256d sv = _mm256_set1_pd(step);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d gi = _mm256_loadu_pd(g + i);
    __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)),
                               _mm256_mul_pd(ob1, gi));
    __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                               _mm256_mul_pd(ob2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    __m256d mhat = _mm256_mul_pd(mi, ib1);
    __m256d upd;
    if (rectified) {
      __m256d denom =
          _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, ib2)), ev);
      upd = _mm256_mul_pd(sv, _mm256_div_pd(mhat, denom));
    } else {
      upd = _mm256_mul_pd(sv, mhat);
    }
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
  }
  if (i < n)
    scalar::radam_update(p + i, g + i, m + i, v + i, n - i, beta1, beta2, eps,
                         step, rectified, inv_bias1, inv_bias2);
}

double dot(const double* a, const double* b, size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4),
                         a1);
    a2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8),
                         a2);
    a3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12),
                         _mm256_loadu_pd(b + i + 12), a3);
  }
  for (; i + 4 <= n; i += 4)
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), a0);
  double s = hsum1(_mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum(const double* x, size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
    a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
  double s = hsum1(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += x[i];
  return s;
}

double maxval(const double* x, size_t n) {
  size_t i = 0;
  double m = x[0];
  if (n >= 4) {
    __m256d mv = _mm256_loadu_pd(x);
    i = 4;
    for (; i + 4 <= n; i += 4)
      mv = _mm256_max_pd(mv, _mm256_loadu_pd(x + i));
    __m128d lo = _mm256_castpd256_pd128(mv);
    __m128d hi = _mm256_extractf128_pd(mv, 1);
    __m128d mx = _mm_max_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(mx, mx);
    m = _mm_cvtsd_f64(_mm_max_sd(mx, sh));
  }
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

void matmul(double* c, const double* a, const double* b, size_t m, size_t k,
            size_t n, bool accumulate) {
  if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
  for (size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    size_t j = 0;
    // 16-column strips held in registers across the k loop
    for (; j + 16 <= n; j += 16) {
      __m256d c0 = _mm256_loadu_pd(ci + j);
      __m256d c1 = _mm256_loadu_pd(ci + j + 4);
      __m256d c2 = _mm256_loadu_pd(ci + j + 8);
      __m256d c3 = _mm256_loadu_pd(ci + j + 12);
      for (size_t p = 0; p < k; ++p) {
        __m256d av = _mm256_set1_pd(ai[p]);
        const double* bp = b + p * n + j;
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 4), c1);
        c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 8), c2);
        c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 12), c3);
      }
      _mm256_storeu_pd(ci + j, c0);
      _mm256_storeu_pd(ci + j + 4, c1);
      _mm256_storeu_pd(ci + j + 8, c2);
      _mm256_storeu_pd(ci + j + 12, c3);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = _mm256_loadu_pd(ci + j);
      for (size_t p = 0; p < k; ++p)
        c0 = _mm256_fmadd_pd(_mm256_set1_pd(ai[p]),
                             _mm256_loadu_pd(b + p * n + j), c0);
      _mm256_storeu_pd(ci + j, c0);
    }
    for (; j < n; ++j) {
      double s = ci[j];
      for (size_t p = 0; p < k; ++p) s += ai[p] * b[p * n + j];
      ci[j] = s;
    }
  }
}

void matmul_nt(double* c, const double* a, const double* b, size_t m, size_t k,
               size_t n, bool accumulate) {
  if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
  for (size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + (j + 0) * k;
      const double* b1 = b + (j + 1) * k;
      const double* b2 = b + (j + 2) * k;
      const double* b3 = b + (j + 3) * k;
      __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
      size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        __m256d av = _mm256_loadu_pd(ai + p);
        s0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b0 + p), s0);
        s1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b1 + p), s1);
        s2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b2 + p), s2);
        s3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b3 + p), s3);
      }
      double tmp[4];
      _mm256_storeu_pd(tmp, hsum4(s0, s1, s2, s3));
      for (; p < k; ++p) {
        double av = ai[p];
        tmp[0] += av * b0[p];
        tmp[1] += av * b1[p];
        tmp[2] += av * b2[p];
        tmp[3] += av * b3[p];
      }
      ci[j] += tmp[0];
      ci[j + 1] += tmp[1];
      ci[j + 2] += tmp[2];
      ci[j + 3] += tmp[3];
    }
    for (; j < n; ++j) {
      const double* bj = b + j * k;
      __m256d s0 = _mm256_setzero_pd();
      size_t p = 0;
      for (; p + 4 <= k; p += 4)
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(ai + p), _mm256_loadu_pd(bj + p),
                             s0);
      double s = hsum1(s0);
      for (; p < k; ++p) s += ai[p] * bj[p];
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
      __m256d av = _mm256_set1_pd(ap[i]);
      double* ci = c + i * n;
      size_t j = 0;
      for (; j + 4 <= n; j += 4)
        _mm256_storeu_pd(
            ci + j,
            _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + j),
                            _mm256_loadu_pd(ci + j)));
      for (; j < n; ++j) ci[j] += ap[i] * bp[j];
    }
  }
}

void softmax_rows(double* x, size_t rows, size_t cols) {
  for (size_t r = 0; r < rows; ++r) {
    double* row = x + r * cols;
    double mx = maxval(row, cols);
    __m256d mv = _mm256_set1_pd(mx);
    __m256d acc = _mm256_setzero_pd();
    size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      __m256d e = exp4(_mm256_sub_pd(_mm256_loadu_pd(row + j), mv));
      _mm256_storeu_pd(row + j, e);
      acc = _mm256_add_pd(acc, e);
    }
    double s = hsum1(acc);
    for (; j < cols; ++j) {
      row[j] = fast_exp(row[j] - mx);
      s += row[j];
    }
    __m256d sv = _mm256_set1_pd(s);
    j = 0;
    for (; j + 4 <= cols; j += 4)
      _mm256_storeu_pd(row + j,
                       _mm256_div_pd(_mm256_loadu_pd(row + j), sv));
    for (; j < cols; ++j) row[j] /= s;
  }
}

}  // namespace propdetect::kernels::avx2

#endif  // PROPDETECT_HAVE_AVX2
