#pragma once

#include <cmath>
#include <functional>

// Central finite difference of a scalar closure with respect to one
// in-place-perturbed coordinate. Restores the coordinate afterwards.
inline double central_diff(const std::function<double()>& f, double* coord,
                           double h) {
  double saved = *coord;
  *coord = saved + h;
  double up = f();
  *coord = saved - h;
  double down = f();
  *coord = saved;
  return (up - down) / (2.0 * h);
}

inline bool grad_close(double analytic, double numeric, double abs_tol,
                       double rel_tol) {
  double diff = std::fabs(analytic - numeric);
  double scale = std::max(std::fabs(analytic), std::fabs(numeric));
  return diff <= abs_tol + rel_tol * scale;
}
