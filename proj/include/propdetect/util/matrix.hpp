#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "propdetect/util/errors.hpp"

namespace propdetect {

// Dense row-major matrix of doubles; the toolkit's only tensor type.
// Vectors are stored as 1 x n.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), d_(rows * cols, fill) {}

  static Matrix row_vector(std::initializer_list<double> vals) {
    Matrix m(1, vals.size());
    size_t i = 0;
    for (double v : vals) m.d_[i++] = v;
    return m;
  }

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return d_.size(); }
  bool empty() const { return d_.empty(); }

  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }
  double* row(size_t r) { return d_.data() + r * cols_; }
  const double* row(size_t r) const { return d_.data() + r * cols_; }

  double& operator()(size_t r, size_t c) { return d_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return d_[r * cols_ + c]; }

  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  void fill(double v) { std::fill(d_.begin(), d_.end(), v); }
  void zero() { fill(0.0); }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.d_ == b.d_;
  }

 private:
  size_t rows_ = 0, cols_ = 0;
  std::vector<double> d_;
};

}  // namespace propdetect
