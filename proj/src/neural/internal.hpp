#pragma once

#include <cmath>
#include <vector>

#include "propdetect/kernels/kernels.hpp"
#include "propdetect/util/matrix.hpp"
#include "propdetect/util/rng.hpp"

// Building blocks shared by the neural translation units. Not installed;
// everything here assumes shapes were already validated by the caller.
namespace propdetect::neural::detail {

constexpr double kLnEps = 1e-5;

// y = x * w + b with b broadcast over rows.
inline Matrix linear(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y(x.rows(), w.cols());
  kernels::matmul(y.data(), x.data(), w.data(), x.rows(), x.cols(), w.cols(),
                  false);
  for (size_t r = 0; r < y.rows(); ++r)
    kernels::axpy(1.0, b.data(), y.row(r), y.cols());
  return y;
}

// Accumulates gw += x^T dy and gb += column-sums(dy); returns dx = dy w^T.
inline Matrix linear_backward(const Matrix& x, const Matrix& w,
                              const Matrix& dy, Matrix& gw, Matrix& gb) {
  kernels::matmul_tn(gw.data(), x.data(), dy.data(), x.cols(), x.rows(),
                     dy.cols(), true);
  for (size_t r = 0; r < dy.rows(); ++r)
    kernels::axpy(1.0, dy.row(r), gb.data(), dy.cols());
  Matrix dx(x.rows(), x.cols());
  kernels::matmul_nt(dx.data(), dy.data(), w.data(), dy.rows(), dy.cols(),
                     w.rows(), false);
  return dx;
}

inline void add_into(Matrix& acc, const Matrix& x) {
  kernels::axpy(1.0, x.data(), acc.data(), acc.size());
}

// Row-wise y = gain ⊙ (x - μ)/√(σ² + eps) + bias; keeps x̂ and 1/σ for the
// backward pass.
inline void layernorm(const Matrix& x, const Matrix& gain, const Matrix& bias,
                      Matrix& x_hat, std::vector<double>& rstd, Matrix& y) {
  size_t n = x.cols();
  x_hat = Matrix(x.rows(), n);
  y = Matrix(x.rows(), n);
  rstd.assign(x.rows(), 0.0);
  for (size_t r = 0; r < x.rows(); ++r) {
    const double* xr = x.row(r);
    double mean = kernels::sum(xr, n) / static_cast<double>(n);
    double var = 0.0;
    for (size_t i = 0; i < n; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= static_cast<double>(n);
    double r_inv = 1.0 / std::sqrt(var + kLnEps);
    rstd[r] = r_inv;
    double* hr = x_hat.row(r);
    double* yr = y.row(r);
    for (size_t i = 0; i < n; ++i) {
      hr[i] = (xr[i] - mean) * r_inv;
      yr[i] = gain.data()[i] * hr[i] + bias.data()[i];
    }
  }
}

// Returns dx; accumulates ggain += Σ dy ⊙ x̂ and gbias += Σ dy.
inline Matrix layernorm_backward(const Matrix& dy, const Matrix& gain,
                                 const Matrix& x_hat,
                                 const std::vector<double>& rstd, Matrix& ggain,
                                 Matrix& gbias) {
  size_t n = dy.cols();
  Matrix dx(dy.rows(), n);
  for (size_t r = 0; r < dy.rows(); ++r) {
    const double* dyr = dy.row(r);
    const double* hr = x_hat.row(r);
    double sum_g = 0.0, sum_gh = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double g = gain.data()[i] * dyr[i];
      sum_g += g;
      sum_gh += g * hr[i];
      ggain.data()[i] += dyr[i] * hr[i];
      gbias.data()[i] += dyr[i];
    }
    double mean_g = sum_g / static_cast<double>(n);
    double mean_gh = sum_gh / static_cast<double>(n);
    double* dxr = dx.row(r);
    for (size_t i = 0; i < n; ++i)
      dxr[i] = rstd[r] * (gain.data()[i] * dyr[i] - mean_g - hr[i] * mean_gh);
  }
  return dx;
}

// Inverted dropout: mask entries are 0 or 1/(1-rate), applied in place.
inline void dropout_forward(Matrix& x, double rate, Rng& rng, Matrix& mask) {
  mask = Matrix(x.rows(), x.cols());
  double keep_scale = 1.0 / (1.0 - rate);
  for (size_t i = 0; i < x.size(); ++i) {
    double m = rng.uniform() < rate ? 0.0 : keep_scale;
    mask.data()[i] = m;
    x.data()[i] *= m;
  }
}

inline void dropout_backward(Matrix& dx, const Matrix& mask) {
  if (mask.empty()) return;
  kernels::vmul(dx.data(), mask.data(), dx.data(), dx.size());
}

inline void fill_normal(Matrix& m, Rng& rng, double sd) {
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, sd);
}

}  // namespace propdetect::neural::detail
