#include "repaint/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace repaint {

namespace {

// dlogpi/d(head outputs) for the taken action, written into head_grad /
// log_std_grad (sized by the caller).
void log_prob_head_grad(const ActionDistribution& dist, const Action& action,
                        std::vector<double>& head_grad,
                        std::vector<double>& log_std_grad) {
  if (dist.is_categorical()) {
    const auto& probs = dist.categorical().probs;
    for (std::size_t j = 0; j < probs.size(); ++j) {
      head_grad[j] = (static_cast<int>(j) == action.index ? 1.0 : 0.0) - probs[j];
    }
    log_std_grad.clear();
  } else {
    const auto& g = dist.gaussian();
    log_std_grad.resize(g.dim());
    for (std::size_t d = 0; d < g.dim(); ++d) {
      const double sigma = g.std_at(d);
      const double z = (action.values[d] - g.mean[d]) / sigma;
      head_grad[d] = z / sigma;
      log_std_grad[d] = z * z - 1.0;
    }
  }
}

}  // namespace

double likelihood_ratio(const PolicyNetwork& policy, const Transition& t) {
  const ActionDistribution dist = policy.forward(t.state);
  const double ratio = std::exp(dist.log_prob(t.action) - t.log_prob_behavior);
  detail::require(std::isfinite(ratio) && ratio > 0.0,
                  "likelihood ratio is not positive finite");
  return ratio;
}

double clipped_surrogate(const PolicyNetwork& policy, const ActorBatch& batch,
                         double clip_epsilon, ParamVector* grad,
                         double grad_scale) {
  detail::require(batch.buffer != nullptr && !batch.indices.empty(),
                  "clipped_surrogate on empty batch");
  detail::require(clip_epsilon > 0.0 && clip_epsilon < 1.0,
                  "clip epsilon must lie in (0,1)");
  const double inv_n = 1.0 / static_cast<double>(batch.indices.size());
  double objective = 0.0;
  ForwardCache cache;
  std::vector<double> head_grad;
  std::vector<double> log_std_grad;
  for (const std::size_t i : batch.indices) {
    const Transition& t = batch.buffer->transitions[i];
    const ActionDistribution dist = policy.forward(t.state, grad ? &cache : nullptr);
    const double log_prob = dist.log_prob(t.action);
    const double ratio = std::exp(log_prob - batch.behavior_log_probs[i]);
    if (!std::isfinite(ratio)) {
      throw std::runtime_error("clipped_surrogate: non-finite ratio");
    }
    const double advantage = batch.advantages[i];
    const double clipped =
        std::min(std::max(ratio, 1.0 - clip_epsilon), 1.0 + clip_epsilon);
    const double surrogate = ratio * advantage;
    const double surrogate_clipped = clipped * advantage;
    objective += std::min(surrogate, surrogate_clipped) * inv_n;
    if (grad) {
      // min picks the unclipped branch on ties; otherwise the clipped branch
      // is outside the interval and has zero derivative.
      const double dmin_dlogp =
          surrogate <= surrogate_clipped ? advantage * ratio : 0.0;
      if (dmin_dlogp != 0.0) {
        head_grad.assign(static_cast<std::size_t>(policy.action_count()), 0.0);
        log_prob_head_grad(dist, t.action, head_grad, log_std_grad);
        const double coeff = grad_scale * inv_n * dmin_dlogp;
        for (auto& v : head_grad) v *= coeff;
        for (auto& v : log_std_grad) v *= coeff;
        policy.backward(cache, head_grad, log_std_grad, 1.0, *grad);
      }
    }
  }
  return objective;
}

double mean_entropy(const PolicyNetwork& policy, const TrajectoryBuffer& buffer,
                    std::span<const std::size_t> indices, ParamVector* grad,
                    double grad_scale) {
  detail::require(!indices.empty(), "mean_entropy on empty batch");
  const double inv_n = 1.0 / static_cast<double>(indices.size());
  double total = 0.0;
  ForwardCache cache;
  std::vector<double> head_grad;
  std::vector<double> log_std_grad;
  for (const std::size_t i : indices) {
    const Transition& t = buffer.transitions[i];
    const ActionDistribution dist = policy.forward(t.state, grad ? &cache : nullptr);
    const double h = dist.entropy();
    total += h * inv_n;
    if (!grad) continue;
    if (dist.is_categorical()) {
      const auto& probs = dist.categorical().probs;
      head_grad.resize(probs.size());
      for (std::size_t j = 0; j < probs.size(); ++j) {
        head_grad[j] = -probs[j] * (std::log(probs[j]) + h);
      }
      log_std_grad.clear();
    } else {
      // Entropy of a diagonal Gaussian depends on log-std only.
      head_grad.assign(dist.gaussian().dim(), 0.0);
      log_std_grad.assign(dist.gaussian().dim(), 1.0);
    }
    const double coeff = grad_scale * inv_n;
    for (auto& v : head_grad) v *= coeff;
    for (auto& v : log_std_grad) v *= coeff;
    policy.backward(cache, head_grad, log_std_grad, 1.0, *grad);
  }
  return total;
}

double mean_cross_entropy(const PolicyNetwork& teacher,
                          const PolicyNetwork& policy,
                          const TrajectoryBuffer& buffer,
                          std::span<const std::size_t> indices,
                          ParamVector* grad, double grad_scale) {
  detail::require(!indices.empty(), "mean_cross_entropy on empty batch");
  detail::require(teacher.head() == policy.head() &&
                      teacher.action_count() == policy.action_count(),
                  "teacher/student head mismatch");
  const double inv_n = 1.0 / static_cast<double>(indices.size());
  double total = 0.0;
  ForwardCache cache;
  std::vector<double> head_grad;
  std::vector<double> log_std_grad;
  for (const std::size_t i : indices) {
    const Transition& t = buffer.transitions[i];
    const ActionDistribution teacher_dist = teacher.forward(t.state);
    const ActionDistribution dist = policy.forward(t.state, grad ? &cache : nullptr);
    total += teacher_dist.cross_entropy(dist) * inv_n;
    if (!grad) continue;
    if (dist.is_categorical()) {
      const auto& p_teacher = teacher_dist.categorical().probs;
      const auto& p = dist.categorical().probs;
      head_grad.resize(p.size());
      for (std::size_t j = 0; j < p.size(); ++j) {
        head_grad[j] = p[j] - p_teacher[j];
      }
      log_std_grad.clear();
    } else {
      const auto& gt = teacher_dist.gaussian();
      const auto& gq = dist.gaussian();
      head_grad.resize(gq.dim());
      log_std_grad.resize(gq.dim());
      for (std::size_t d = 0; d < gq.dim(); ++d) {
        const double vq = gq.std_at(d) * gq.std_at(d);
        const double vt = gt.std_at(d) * gt.std_at(d);
        const double dm = gq.mean[d] - gt.mean[d];
        head_grad[d] = dm / vq;
        log_std_grad[d] = 1.0 - (vt + dm * dm) / vq;
      }
    }
    const double coeff = grad_scale * inv_n;
    for (auto& v : head_grad) v *= coeff;
    for (auto& v : log_std_grad) v *= coeff;
    policy.backward(cache, head_grad, log_std_grad, 1.0, *grad);
  }
  return total;
}

double critic_mse(const ValueNetwork& critic, const TrajectoryBuffer& buffer,
                  std::span<const std::size_t> indices,
                  std::span<const double> targets, ParamVector* grad,
                  double grad_scale) {
  detail::require(!indices.empty(), "critic_mse on empty batch");
  const double inv_n = 1.0 / static_cast<double>(indices.size());
  double loss = 0.0;
  ForwardCache cache;
  for (const std::size_t i : indices) {
    const Transition& t = buffer.transitions[i];
    const double v = critic.value(t.state, grad ? &cache : nullptr);
    const double residual = v - targets[i];
    loss += residual * residual * inv_n;
    if (grad) {
      critic.backward(cache, 2.0 * residual * inv_n * grad_scale, 1.0, *grad);
    }
  }
  if (!std::isfinite(loss)) {
    throw std::runtime_error("critic_mse: non-finite loss");
  }
  return loss;
}

}  // namespace repaint
