#include "repaint/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace repaint {

void SelectionRule::validate() const {
  detail::require(std::isfinite(zeta), "zeta must be finite");
  if (kind == Kind::kTopFraction) {
    detail::require(fraction > 0.0 && fraction <= 1.0,
                    "top fraction must lie in (0,1]");
  }
  if (kind == Kind::kPrioritized) {
    detail::require(exponent >= 0.0, "prioritized exponent must be >= 0");
    detail::require(sample_count >= 0, "sample count must be >= 0");
  }
}

void TransferConfig::validate(std::size_t teacher_count) const {
  detail::require(alpha1 >= 0.0 && alpha2 >= 0.0,
                  "alpha1/alpha2 must be >= 0");
  detail::require(alternate_rep >= 0 && alternate_ins >= 0 &&
                      alternate_rep + alternate_ins >= 1,
                  "alternation ratio must have at least one slot");
  detail::require(phase_iterations >= 0, "phase_iterations must be >= 0");
  detail::require(betas.size() <= std::max<std::size_t>(teacher_count, 1),
                  "more beta schedules than teachers");
  selection.validate();
  for (const auto& b : betas) (void)b.at(0);  // validates the schedule fields
}

std::vector<std::size_t> select_indices(const std::vector<double>& advantages,
                                        const SelectionRule& rule,
                                        std::uint64_t seed) {
  rule.validate();
  std::vector<std::size_t> kept;
  const std::size_t n = advantages.size();
  switch (rule.kind) {
    case SelectionRule::Kind::kThreshold:
      // Algorithm removes A' < zeta, i.e. keeps A' >= zeta.
      for (std::size_t i = 0; i < n; ++i) {
        if (advantages[i] >= rule.zeta) kept.push_back(i);
      }
      break;
    case SelectionRule::Kind::kAbsThreshold:
      for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(advantages[i]) > rule.zeta) kept.push_back(i);
      }
      break;
    case SelectionRule::Kind::kTopFraction: {
      if (n == 0) break;
      const auto count = static_cast<std::size_t>(
          std::ceil(rule.fraction * static_cast<double>(n)));
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return advantages[a] > advantages[b];
                       });
      order.resize(std::min(count, n));
      std::sort(order.begin(), order.end());
      kept = std::move(order);
      break;
    }
    case SelectionRule::Kind::kPrioritized: {
      if (n == 0) break;
      // p_i proportional to (max(A_i,0)+delta)^exponent; draws with
      // replacement, no importance weights.
      constexpr double kDelta = 1e-6;
      std::vector<double> priority(n);
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        priority[i] = std::pow(std::max(advantages[i], 0.0) + kDelta, rule.exponent);
        total += priority[i];
      }
      const std::size_t draws =
          rule.sample_count > 0 ? static_cast<std::size_t>(rule.sample_count) : n;
      Rng rng(derive_seed(seed, Stream::kSelection));
      for (std::size_t d = 0; d < draws; ++d) {
        const double u = rng.uniform() * total;
        double cumulative = 0.0;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          cumulative += priority[i];
          if (u < cumulative) {
            pick = i;
            break;
          }
        }
        kept.push_back(pick);
      }
      break;
    }
  }
  return kept;
}

TrajectoryBuffer select_experiences(const TrajectoryBuffer& buffer,
                                    const SelectionRule& rule,
                                    std::uint64_t seed) {
  detail::require(buffer.has_advantages(),
                  "select_experiences requires computed advantages");
  const auto kept = select_indices(buffer.advantages, rule, seed);
  TrajectoryBuffer out;
  out.source = buffer.source;
  out.transitions.reserve(kept.size());
  out.advantages.reserve(kept.size());
  for (const std::size_t i : kept) {
    out.transitions.push_back(buffer.transitions[i]);
    out.advantages.push_back(buffer.advantages[i]);
    if (!buffer.returns.empty()) out.returns.push_back(buffer.returns[i]);
    if (!buffer.values.empty()) out.values.push_back(buffer.values[i]);
  }
  return out;
}

double aux_cross_entropy(const TeacherPolicy& teacher,
                         const PolicyNetwork& policy,
                         const TrajectoryBuffer& buffer) {
  detail::require(!buffer.empty(), "aux_cross_entropy on empty buffer");
  std::vector<std::size_t> all(buffer.size());
  std::iota(all.begin(), all.end(), 0);
  return mean_cross_entropy(teacher.network(), policy, buffer, all);
}

double representation_objective(const PolicyNetwork& policy,
                                const TrajectoryBuffer& buffer,
                                const std::vector<TeacherPolicy>& teachers,
                                const TransferConfig& cfg, double clip_epsilon,
                                int k) {
  detail::require(buffer.has_advantages(),
                  "representation_objective requires advantages");
  std::vector<std::size_t> all(buffer.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<double> behavior(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    behavior[i] = buffer.transitions[i].log_prob_behavior;
  }
  double objective = clipped_surrogate(
      policy, {&buffer, all, buffer.advantages, behavior}, clip_epsilon);
  for (std::size_t t = 0; t < teachers.size(); ++t) {
    const double beta = cfg.beta_at(t, k);
    if (beta != 0.0) {
      objective -= beta * aux_cross_entropy(teachers[t], policy, buffer);
    }
  }
  return objective;
}

double instance_objective(const PolicyNetwork& policy,
                          const TrajectoryBuffer& filtered,
                          double clip_epsilon, ParamVector* grad,
                          double grad_scale) {
  if (filtered.empty()) return 0.0;  // update skipped
  detail::require(filtered.has_advantages(),
                  "instance_objective requires advantages");
  std::vector<std::size_t> all(filtered.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<double> behavior(filtered.size());
  for (std::size_t i = 0; i < filtered.size(); ++i) {
    behavior[i] =
        TeacherPolicy::floor_log_prob(filtered.transitions[i].log_prob_behavior);
  }
  return clipped_surrogate(policy,
                           {&filtered, all, filtered.advantages, behavior},
                           clip_epsilon, grad, grad_scale);
}

GradientDiagnostic diagnostic_from_gradients(const ParamVector& grad_rep,
                                             const ParamVector& grad_ins,
                                             double a_k) {
  GradientDiagnostic d;
  d.rep_norm2 = grad_rep.squared_norm();
  d.ins_norm2 = grad_ins.squared_norm();
  d.inner = grad_rep.dot(grad_ins);
  d.f = d.rep_norm2 + a_k * d.ins_norm2 + (1.0 + a_k) * d.inner;
  return d;
}

GradientDiagnostic gradient_diagnostic(const PolicyNetwork& policy,
                                       const TrajectoryBuffer& student_buffer,
                                       const TrajectoryBuffer& filtered_teacher,
                                       const std::vector<TeacherPolicy>& teachers,
                                       const TransferConfig& cfg,
                                       double clip_epsilon, int k, double a_k) {
  ParamVector grad_rep(policy.params().size());
  ParamVector grad_ins(policy.params().size());
  if (!student_buffer.empty()) {
    std::vector<std::size_t> all(student_buffer.size());
    std::iota(all.begin(), all.end(), 0);
    std::vector<double> behavior(student_buffer.size());
    for (std::size_t i = 0; i < student_buffer.size(); ++i) {
      behavior[i] = student_buffer.transitions[i].log_prob_behavior;
    }
    clipped_surrogate(policy,
                      {&student_buffer, all, student_buffer.advantages, behavior},
                      clip_epsilon, &grad_rep, 1.0);
    for (std::size_t t = 0; t < teachers.size(); ++t) {
      const double beta = cfg.beta_at(t, k);
      if (beta != 0.0) {
        mean_cross_entropy(teachers[t].network(), policy, student_buffer, all,
                           &grad_rep, -beta);
      }
    }
  }
  instance_objective(policy, filtered_teacher, clip_epsilon, &grad_ins, 1.0);
  return diagnostic_from_gradients(grad_rep, grad_ins, a_k);
}

bool alternating_slot_is_rep(const TransferConfig& cfg, int iteration) {
  detail::require(iteration >= 1, "iterations are 1-based");
  const int cycle = cfg.alternate_rep + cfg.alternate_ins;
  return (iteration - 1) % cycle < cfg.alternate_rep;
}

// ---------------------------------------------------------------------------
// Q-learning extension
// ---------------------------------------------------------------------------

QNetwork::QNetwork(MlpArch arch, std::uint64_t init_seed, bool tabular)
    : arch_(std::move(arch)), tabular_(tabular) {
  detail::require(arch_.output_dim >= 1, "q net needs at least one action");
  detail::require(!tabular_ || arch_.hidden.empty(),
                  "tabular q net cannot have hidden layers");
  layout_ = make_mlp_layout(arch_, false);
  params_ = ParamVector(layout_.total_size());
  Rng rng(init_seed);
  init_mlp_params(arch_, layout_, params_, rng, std::sqrt(2.0), 1.0);
  if (tabular_) {
    params_ = ParamVector(layout_.total_size());  // zero table
  }
}

std::vector<double> QNetwork::q_values(const std::vector<double>& state,
                                       ForwardCache* cache) const {
  return mlp_forward(arch_, layout_, params_, state, cache);
}

double QNetwork::q_value(const std::vector<double>& state, int action) const {
  detail::require(action >= 0 && action < arch_.output_dim,
                  "q_value action out of range");
  return q_values(state)[static_cast<std::size_t>(action)];
}

void QNetwork::backward(const ForwardCache& cache, int action, double grad_q,
                        ParamVector& grad) const {
  std::vector<double> out_grad(static_cast<std::size_t>(arch_.output_dim), 0.0);
  out_grad[static_cast<std::size_t>(action)] = grad_q;
  mlp_backward(arch_, layout_, params_, cache, out_grad, 1.0, grad);
}

QUpdateResult q_transfer_update(const QTransferConfig& cfg, QNetwork& qnet,
                                const TrajectoryBuffer& teacher_buffer,
                                const TrajectoryBuffer& self_buffer) {
  cfg.validate();
  QUpdateResult result;
  // Teacher samples plus a slice of self-collected epsilon-greedy samples.
  std::vector<const Transition*> samples;
  for (const auto& t : teacher_buffer.transitions) samples.push_back(&t);
  const auto self_take = std::min(
      self_buffer.size(),
      static_cast<std::size_t>(std::llround(
          cfg.epsilon_greedy_mix * static_cast<double>(teacher_buffer.size()))));
  for (std::size_t i = 0; i < self_take; ++i) {
    samples.push_back(&self_buffer.transitions[i]);
  }
  result.considered = static_cast<int>(samples.size());

  ParamVector grad(qnet.params().size());
  ForwardCache cache;
  for (const Transition* t : samples) {
    detail::require(t->action.is_discrete, "q transfer expects discrete actions");
    const auto qs = qnet.q_values(t->state, &cache);
    const double q = qs[static_cast<std::size_t>(t->action.index)];
    double next_max = 0.0;
    if (!t->done) {
      const auto qn = qnet.q_values(t->next_state);
      next_max = *std::max_element(qn.begin(), qn.end());
    }
    const double y = t->reward + cfg.gamma * next_max;
    if (y - q > cfg.zeta_q) {
      const double residual = q - y;
      result.loss += 0.5 * residual * residual;
      result.kept += 1;
      qnet.backward(cache, t->action.index, residual, grad);
    }
  }
  if (result.kept > 0) {
    qnet.params().add_scaled(grad, -cfg.learning_rate);
    detail::require(qnet.params().all_finite(), "q update produced non-finite params");
  }
  return result;
}

TrajectoryBuffer collect_epsilon_greedy(const QNetwork& qnet, Env& env,
                                        double epsilon,
                                        const RolloutBudget& budget,
                                        std::uint64_t seed) {
  detail::require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must be in [0,1]");
  detail::require(env.is_discrete() && env.action_count() == qnet.action_count(),
                  "q net / env action space mismatch");
  TrajectoryBuffer buffer;
  buffer.source = SampleSource::kStudent;
  Rng rng(derive_seed(seed, Stream::kInit));
  int episodes_done = 0;
  std::uint64_t episode_index = 0;
  while (true) {
    if (budget.kind == RolloutBudget::Kind::kEpisodes &&
        episodes_done >= budget.amount) {
      break;
    }
    if (budget.kind == RolloutBudget::Kind::kSteps &&
        static_cast<int>(buffer.size()) >= budget.amount) {
      break;
    }
    std::vector<double> state =
        env.reset(derive_seed(seed, Stream::kEnv, episode_index++));
    while (!env.done()) {
      int a;
      if (rng.uniform() < epsilon) {
        a = static_cast<int>(rng.below(static_cast<std::uint64_t>(env.action_count())));
      } else {
        const auto qs = qnet.q_values(state);
        a = static_cast<int>(
            std::max_element(qs.begin(), qs.end()) - qs.begin());
      }
      const Action action = Action::discrete(a);
      const StepResult sr = env.step(action);
      buffer.transitions.push_back({state, action, sr.next_state, sr.reward, 0.0,
                                    sr.done, SampleSource::kStudent});
      state = sr.next_state;
      if (budget.kind == RolloutBudget::Kind::kSteps &&
          static_cast<int>(buffer.size()) >= budget.amount) {
        break;
      }
    }
    if (env.done()) episodes_done += 1;
  }
  return buffer;
}

}  // namespace repaint
