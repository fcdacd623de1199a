#pragma once

#include <cstdint>
#include <vector>

#include "propdetect/neural/param.hpp"

namespace propdetect::neural {

// Rectified adaptive-moment estimation with linear learning-rate warm-up.
// During the early steps where the variance rectification term is undefined
// (ρ_t ≤ 4), the update falls back to the unrectified first-moment step.
struct RAdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  uint64_t warmup_steps = 0;  // 0 disables warm-up
};

class RAdam {
 public:
  RAdam(std::vector<ParamRef> params, RAdamConfig cfg);

  // One update from the accumulated gradients. Throws NumericError naming
  // the parameter if any gradient entry is non-finite.
  void step();
  void zero_grad();

  uint64_t steps_taken() const { return t_; }
  // Learning rate the next step will apply (after warm-up scaling).
  double next_lr() const;

  // ρ_t > 4, i.e. whether step t uses the rectified variance term.
  static bool rectified_at(double beta2, uint64_t t);
  // Rectification multiplier r_t; only meaningful when rectified_at holds.
  static double rect_factor(double beta2, uint64_t t);

 private:
  struct Slot {
    std::vector<double> m, v;
  };
  std::vector<ParamRef> params_;
  std::vector<Slot> slots_;
  RAdamConfig cfg_;
  uint64_t t_ = 0;
};

}  // namespace propdetect::neural
