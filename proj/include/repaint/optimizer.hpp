#pragma once

#include <cstdint>

#include "repaint/param_vector.hpp"

namespace repaint {

enum class StepDirection { kAscend, kDescend };

// Adam (or plain SGD when `use_adam` is off) over a flat parameter vector.
// Moment accumulators are aligned 1:1 with the parameters they update.
class OptimizerState {
 public:
  OptimizerState() = default;
  OptimizerState(std::size_t param_count, double learning_rate,
                 bool use_adam = true, double beta1 = 0.9, double beta2 = 0.999,
                 double epsilon = 1e-8)
      : m_(param_count),
        v_(param_count),
        lr_(learning_rate),
        beta1_(beta1),
        beta2_(beta2),
        eps_(epsilon),
        use_adam_(use_adam) {}

  // One update with an explicit learning rate; `params` is modified in place.
  void step(ParamVector& params, const ParamVector& grad, StepDirection dir,
            double learning_rate);

  void step(ParamVector& params, const ParamVector& grad, StepDirection dir) {
    step(params, grad, dir, lr_);
  }

  std::int64_t step_count() const { return steps_; }
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  std::size_t param_count() const { return m_.size(); }

 private:
  ParamVector m_;
  ParamVector v_;
  std::int64_t steps_ = 0;
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  bool use_adam_ = true;
};

}  // namespace repaint
