#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "repaint/network.hpp"
#include "repaint/rollout.hpp"

namespace repaint {

// A minibatch over a trajectory buffer. `advantages` and
// `behavior_log_probs` are aligned with the full buffer, not the index list.
struct ActorBatch {
  const TrajectoryBuffer* buffer = nullptr;
  std::span<const std::size_t> indices;
  std::span<const double> advantages;
  std::span<const double> behavior_log_probs;
};

// Mean of min(l*A, clip(l)*A) with l = exp(logpi - behavior). When `grad` is
// given, adds grad_scale * d(mean)/d(params) into it. The clip kink uses the
// standard convention: identity inside (1-eps, 1+eps), constant outside.
double clipped_surrogate(const PolicyNetwork& policy, const ActorBatch& batch,
                         double clip_epsilon, ParamVector* grad = nullptr,
                         double grad_scale = 1.0);

// Mean policy entropy over the batch states.
double mean_entropy(const PolicyNetwork& policy, const TrajectoryBuffer& buffer,
                    std::span<const std::size_t> indices,
                    ParamVector* grad = nullptr, double grad_scale = 1.0);

// Mean over batch states of H(pi_teacher(.|s) || pi_theta(.|s)). The
// teacher side is a constant; gradients flow through the student only.
double mean_cross_entropy(const PolicyNetwork& teacher,
                          const PolicyNetwork& policy,
                          const TrajectoryBuffer& buffer,
                          std::span<const std::size_t> indices,
                          ParamVector* grad = nullptr, double grad_scale = 1.0);

// Mean squared error of V(s) against `targets` (aligned with the buffer).
double critic_mse(const ValueNetwork& critic, const TrajectoryBuffer& buffer,
                  std::span<const std::size_t> indices,
                  std::span<const double> targets, ParamVector* grad = nullptr,
                  double grad_scale = 1.0);

// exp(logpi_theta(a|s) - logpi_behavior) for a single transition.
double likelihood_ratio(const PolicyNetwork& policy, const Transition& t);

}  // namespace repaint
