#include "propdetect/neural/optim.hpp"

#include <algorithm>
#include <cmath>

#include "propdetect/kernels/kernels.hpp"
#include "propdetect/util/errors.hpp"

namespace propdetect::neural {

RAdam::RAdam(std::vector<ParamRef> params, RAdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (!(cfg_.lr > 0.0)) throw ContractError("learning rate must be positive");
  if (!(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0) ||
      !(cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0))
    throw ContractError("beta coefficients must lie in [0, 1)");
  slots_.reserve(params_.size());
  for (const auto& p : params_) {
    Slot s;
    s.m.assign(p.size, 0.0);
    s.v.assign(p.size, 0.0);
    slots_.push_back(std::move(s));
  }
}

double RAdam::next_lr() const {
  uint64_t t = t_ + 1;
  double warm = cfg_.warmup_steps == 0
                    ? 1.0
                    : std::min(1.0, static_cast<double>(t) /
                                        static_cast<double>(cfg_.warmup_steps));
  return cfg_.lr * warm;
}

bool RAdam::rectified_at(double beta2, uint64_t t) {
  double rho_inf = 2.0 / (1.0 - beta2) - 1.0;
  double b2t = std::pow(beta2, static_cast<double>(t));
  double rho_t =
      rho_inf - 2.0 * static_cast<double>(t) * b2t / (1.0 - b2t);
  return rho_t > 4.0;
}

double RAdam::rect_factor(double beta2, uint64_t t) {
  double rho_inf = 2.0 / (1.0 - beta2) - 1.0;
  double b2t = std::pow(beta2, static_cast<double>(t));
  double rho_t =
      rho_inf - 2.0 * static_cast<double>(t) * b2t / (1.0 - b2t);
  return std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                   ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
}

void RAdam::step() {
  double lr_t = next_lr();
  ++t_;
  double b1t = std::pow(cfg_.beta1, static_cast<double>(t_));
  double b2t = std::pow(cfg_.beta2, static_cast<double>(t_));
  double inv_bias1 = 1.0 / (1.0 - b1t);
  double inv_bias2 = 1.0 / (1.0 - b2t);
  bool rect = rectified_at(cfg_.beta2, t_);
  double step_size = rect ? lr_t * rect_factor(cfg_.beta2, t_) : lr_t;

  for (size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    for (size_t j = 0; j < p.size; ++j)
      if (!std::isfinite(p.grad[j]))
        throw NumericError("non-finite gradient in parameter '" + p.name +
                           "'");
    kernels::radam_update(p.value, p.grad, slots_[i].m.data(),
                          slots_[i].v.data(), p.size, cfg_.beta1, cfg_.beta2,
                          cfg_.eps, step_size, rect, inv_bias1, inv_bias2);
  }
}

void RAdam::zero_grad() {
  for (auto& p : params_)
    std::fill(p.grad, p.grad + p.size, 0.0);
}

}  // namespace propdetect::neural
