#pragma once

#include <cmath>
#include <cstdint>

namespace propdetect::kernels {

// Polynomial exp/tanh/sigmoid/gelu shared by the scalar and AVX2 backends.
// Both backends evaluate the exact same operation sequence, so elementwise
// kernels are bit-identical across backends (reductions are not; they are
// tolerance-tested instead). Coefficients are the classic Cephes exp() pair.

namespace detail {

inline constexpr double kLog2E = 1.4426950408889634073599;
inline constexpr double kC1 = 6.93145751953125e-1;          // ln2 high part
inline constexpr double kC2 = 1.42860682030941723212e-6;    // ln2 low part
inline constexpr double kExpHi = 709.0;                     // overflow guard
inline constexpr double kExpLo = -708.0;                    // flush-to-zero

inline constexpr double kP0 = 1.26177193074810590878e-4;
inline constexpr double kP1 = 3.02994407707441961300e-2;
inline constexpr double kP2 = 9.99999999999999999910e-1;
inline constexpr double kQ0 = 3.00198505138664455042e-6;
inline constexpr double kQ1 = 2.52448340349684104192e-3;
inline constexpr double kQ2 = 2.27265548208155028766e-1;
inline constexpr double kQ3 = 2.00000000000000000005e0;

}  // namespace detail

// exp(x) to ~1 ulp over the supported range. Inputs above kExpHi return
// +inf; below kExpLo return exactly 0 (subnormal results are flushed, which
// keeps the exponent reconstruction branch-free on the SIMD side).
inline double fast_exp(double x) {
  using namespace detail;
  if (x > kExpHi) return HUGE_VAL;
  if (x < kExpLo) return 0.0;
  double n = std::floor(kLog2E * x + 0.5);
  x = x - n * kC1;
  x = x - n * kC2;
  double xx = x * x;
  double px = x * ((kP0 * xx + kP1) * xx + kP2);
  double qx = ((kQ0 * xx + kQ1) * xx + kQ2) * xx + kQ3;
  double e = px / (qx - px);
  e = 1.0 + 2.0 * e;
  // 2^n via exponent bits; n is within [-1075, 1025] here and e is in
  // [0.5, 2], so the product stays normal for all non-flushed inputs.
  int64_t ni = static_cast<int64_t>(n);
  uint64_t bits = static_cast<uint64_t>(ni + 1023) << 52;
  double scale;
  __builtin_memcpy(&scale, &bits, sizeof scale);
  return e * scale;
}

inline double fast_tanh(double x) {
  double ax = std::fabs(x);
  double u = fast_exp(-2.0 * ax);
  double t = (1.0 - u) / (1.0 + u);
  return x < 0.0 ? -t : t;
}

inline double fast_sigmoid(double x) {
  double u = fast_exp(-x);
  return 1.0 / (1.0 + u);
}

namespace detail {
inline constexpr double kGeluC0 = 0.79788456080286535588;  // sqrt(2/pi)
inline constexpr double kGeluC1 = 0.044715;
}  // namespace detail

// Tanh-form gaussian-error-linear unit, the convention of the encoder
// family this toolkit mirrors.
inline double gelu_scalar(double x) {
  using namespace detail;
  double u = kGeluC0 * (x + kGeluC1 * (x * x * x));
  return 0.5 * x * (1.0 + fast_tanh(u));
}

inline double gelu_grad_scalar(double x) {
  using namespace detail;
  double x2 = x * x;
  double u = kGeluC0 * (x + kGeluC1 * (x * x2));
  double t = fast_tanh(u);
  double du = kGeluC0 * (1.0 + 3.0 * kGeluC1 * x2);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

}  // namespace propdetect::kernels
