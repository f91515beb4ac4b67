#include "repaint/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace repaint {

void OptimizerState::step(ParamVector& params, const ParamVector& grad,
                          StepDirection dir, double learning_rate) {
  detail::require(params.size() == m_.size(), "optimizer/parameter size mismatch");
  detail::require(grad.size() == m_.size(), "optimizer/gradient size mismatch");
  if (!grad.all_finite()) {
    throw std::invalid_argument("optimizer_step: non-finite gradient rejected");
  }
  steps_ += 1;
  const double sign = dir == StepDirection::kAscend ? 1.0 : -1.0;
  if (!use_adam_) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i] += sign * learning_rate * grad[i];
    }
  } else {
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      const double m_hat = m_[i] / bc1;
      const double v_hat = v_[i] / bc2;
      params[i] += sign * learning_rate * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
  if (!params.all_finite()) {
    throw std::runtime_error("optimizer_step: produced non-finite parameters");
  }
}

}  // namespace repaint
