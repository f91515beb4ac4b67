#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "repaint/transfer.hpp"

namespace repaint {

namespace {

std::vector<std::vector<std::size_t>> make_minibatches(std::size_t n,
                                                       int minibatch_size,
                                                       Rng& rng) {
  std::vector<std::size_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  rng.shuffle(indices);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n;
       start += static_cast<std::size_t>(minibatch_size)) {
    const std::size_t stop =
        std::min(n, start + static_cast<std::size_t>(minibatch_size));
    batches.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(start),
                         indices.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

double mean_episodic_return(const TrajectoryBuffer& buffer) {
  double total = 0.0;
  int episodes = 0;
  for (const auto& t : buffer.transitions) {
    total += t.reward;
    if (t.done) episodes += 1;
  }
  return total / std::max(episodes, 1);
}

std::vector<double> behavior_log_probs(const TrajectoryBuffer& buffer,
                                       bool floor_teacher) {
  std::vector<double> lp(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    lp[i] = buffer.transitions[i].log_prob_behavior;
    if (floor_teacher) lp[i] = TeacherPolicy::floor_log_prob(lp[i]);
  }
  return lp;
}

double mean_kl(const PolicyNetwork& old_policy, const PolicyNetwork& policy,
               const TrajectoryBuffer& buffer) {
  if (buffer.empty()) return 0.0;
  double total = 0.0;
  for (const auto& t : buffer.transitions) {
    total += old_policy.forward(t.state).kl(policy.forward(t.state));
  }
  return total / static_cast<double>(buffer.size());
}

struct SlotPlan {
  bool rep = true;   // student rollouts, critic fit, representation gradient
  bool ins = false;  // teacher rollouts, selection, instance gradient
  const TransferConfig* transfer = nullptr;  // null = plain PPO
};

// One training iteration. Plain PPO, combined REPAINT and the alternating
// slots all run through here; the RNG streams are derived per consumer so a
// disabled branch never shifts the draws of an enabled one.
IterationMetrics run_iteration(LearnerState& learner, Env& env,
                               const std::vector<TeacherPolicy>& teachers,
                               const TrainContext& ctx, const SlotPlan& plan,
                               int iteration, std::uint64_t seed) {
  detail::require(iteration >= 1, "iterations are 1-based");
  ctx.ppo.validate();
  IterationMetrics metrics;

  const PolicyNetwork old_policy = learner.actor;  // theta_old snapshot
  const bool rep = plan.rep;
  const bool ins = plan.ins && !teachers.empty();

  double lr_rep = ctx.ppo.actor_lr;
  double lr_ins = ctx.ppo.actor_lr;
  double beta_total = 0.0;
  if (plan.transfer) {
    lr_rep = plan.transfer->alpha1;
    lr_ins = plan.transfer->alpha2;
    for (std::size_t t = 0; t < teachers.size(); ++t) {
      beta_total += plan.transfer->beta_at(t, iteration);
    }
  }
  const bool do_rep = rep && lr_rep > 0.0;
  const bool do_ins = ins && lr_ins > 0.0;

  // --- rollouts ---
  TrajectoryBuffer student;
  TrajectoryBuffer teacher_raw;
  if (rep) {
    student = collect(learner.actor, env, ctx.student_budget,
                      derive_seed(seed, Stream::kStudentRollout, static_cast<std::uint64_t>(iteration)),
                      SampleSource::kStudent);
    metrics.student_steps = static_cast<int>(student.size());
    metrics.mean_return = mean_episodic_return(student);
  }
  if (ins) {
    teacher_raw = collect(teachers.front().network(), env, ctx.teacher_budget,
                          derive_seed(seed, Stream::kTeacherRollout, static_cast<std::uint64_t>(iteration)),
                          SampleSource::kTeacher);
    metrics.teacher_steps = static_cast<int>(teacher_raw.size());
    if (!rep) metrics.mean_return = mean_episodic_return(teacher_raw);
  }

  // --- critic fit (student samples only; instance slots leave it alone) ---
  std::vector<double> normalized;
  if (rep) {
    compute_gae(student, learner.critic, ctx.gae);
    const auto trace = fit_critic(student, learner.critic, learner.critic_opt,
                                  ctx.ppo, derive_seed(seed, Stream::kCriticUpdate, static_cast<std::uint64_t>(iteration)));
    metrics.critic_loss = trace.back();
    // Advantages for the actor come from the refreshed critic.
    compute_gae(student, learner.critic, ctx.gae);
    normalized = normalized_advantages(student);
  }

  // --- experience selection on the teacher buffer (raw advantage scale) ---
  TrajectoryBuffer kept;
  if (ins) {
    compute_gae(teacher_raw, learner.critic, ctx.gae);
    kept = select_experiences(teacher_raw, plan.transfer->selection,
                              derive_seed(seed, Stream::kSelection, static_cast<std::uint64_t>(iteration)));
    metrics.kept_teacher_steps = static_cast<int>(kept.size());
  }

  std::vector<double> student_behavior;
  if (rep) student_behavior = behavior_log_probs(student, false);
  std::vector<double> kept_behavior = behavior_log_probs(kept, true);

  if (!teachers.empty() && rep && !student.empty()) {
    metrics.aux_cross_entropy =
        aux_cross_entropy(teachers.front(), learner.actor, student);
  }
  metrics.beta_k = beta_total;

  // --- actor epochs: Adam on the summed scaled gradient ---
  const double lr = do_rep ? lr_rep : lr_ins;
  const double ins_scale = (do_rep && do_ins) ? lr_ins / lr_rep : 1.0;
  if (do_rep || (do_ins && !kept.empty())) {
    Rng update_rng(derive_seed(seed, Stream::kActorUpdate, static_cast<std::uint64_t>(iteration)));
    ParamVector grad(learner.actor.params().size());
    for (int epoch = 0; epoch < ctx.ppo.epochs; ++epoch) {
      std::vector<std::vector<std::size_t>> student_batches;
      std::vector<std::vector<std::size_t>> teacher_batches;
      if (do_rep) {
        student_batches =
            make_minibatches(student.size(), ctx.ppo.minibatch_size, update_rng);
      }
      if (do_ins && !kept.empty()) {
        teacher_batches =
            make_minibatches(kept.size(), ctx.ppo.minibatch_size, update_rng);
      }
      const std::size_t steps =
          std::max(student_batches.size(), teacher_batches.size());
      for (std::size_t j = 0; j < steps; ++j) {
        grad.fill(0.0);
        if (j < student_batches.size()) {
          clipped_surrogate(learner.actor,
                            {&student, student_batches[j], normalized,
                             student_behavior},
                            ctx.ppo.clip_epsilon, &grad, 1.0);
          if (ctx.ppo.entropy_coef != 0.0) {
            mean_entropy(learner.actor, student, student_batches[j], &grad,
                         ctx.ppo.entropy_coef);
          }
          if (plan.transfer) {
            for (std::size_t t = 0; t < teachers.size(); ++t) {
              const double beta = plan.transfer->beta_at(t, iteration);
              if (beta != 0.0) {
                mean_cross_entropy(teachers[t].network(), learner.actor,
                                   student, student_batches[j], &grad, -beta);
              }
            }
          }
        }
        if (j < teacher_batches.size()) {
          clipped_surrogate(
              learner.actor,
              {&kept, teacher_batches[j], kept.advantages, kept_behavior},
              ctx.ppo.clip_epsilon, &grad, ins_scale);
        }
        learner.actor_opt.step(learner.actor.params(), grad,
                               StepDirection::kAscend, lr);
      }
    }
  }

  // --- post-update metrics ---
  const TrajectoryBuffer& kl_buffer = rep ? student : kept;
  metrics.kl_to_old = mean_kl(old_policy, learner.actor, kl_buffer);
  if (!kl_buffer.empty()) {
    std::vector<std::size_t> all(kl_buffer.size());
    std::iota(all.begin(), all.end(), 0);
    metrics.entropy = mean_entropy(learner.actor, kl_buffer, all);
  }
  if (rep && !student.empty()) {
    std::vector<std::size_t> all(student.size());
    std::iota(all.begin(), all.end(), 0);
    metrics.actor_objective = clipped_surrogate(
        learner.actor, {&student, all, normalized, student_behavior},
        ctx.ppo.clip_epsilon);
  } else if (!kept.empty()) {
    metrics.actor_objective =
        instance_objective(learner.actor, kept, ctx.ppo.clip_epsilon);
  }
  if (plan.transfer && do_rep && do_ins) {
    const double a_k = lr_rep > 0.0 ? lr_ins / lr_rep : 1.0;
    const GradientDiagnostic diag = gradient_diagnostic(
        learner.actor, student, kept, teachers, *plan.transfer,
        ctx.ppo.clip_epsilon, iteration, a_k);
    metrics.diag_f = diag.f;
    metrics.diag_rep_norm2 = diag.rep_norm2;
    metrics.diag_ins_norm2 = diag.ins_norm2;
    metrics.diag_inner = diag.inner;
  }
  return metrics;
}

}  // namespace

std::vector<double> fit_critic(const TrajectoryBuffer& buffer,
                               ValueNetwork& critic, OptimizerState& opt,
                               const PpoConfig& cfg, std::uint64_t seed) {
  if (buffer.source != SampleSource::kStudent) {
    throw std::invalid_argument(
        "fit_critic: teacher-sourced buffers cannot fit the critic");
  }
  detail::require(!buffer.empty(), "fit_critic on empty buffer");
  detail::require(buffer.returns.size() == buffer.size(),
                  "fit_critic requires GAE returns");
  std::vector<double> trace;
  Rng rng(seed);
  ParamVector grad(critic.params().size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches =
        make_minibatches(buffer.size(), cfg.minibatch_size, rng);
    double epoch_loss = 0.0;
    std::size_t samples = 0;
    for (const auto& batch : batches) {
      grad.fill(0.0);
      const double loss =
          critic_mse(critic, buffer, batch, buffer.returns, &grad);
      opt.step(critic.params(), grad, StepDirection::kDescend, cfg.critic_lr);
      epoch_loss += loss * static_cast<double>(batch.size());
      samples += batch.size();
    }
    trace.push_back(epoch_loss / static_cast<double>(samples));
  }
  return trace;
}

IterationMetrics ppo_iteration(LearnerState& learner, Env& env,
                               const TrainContext& ctx, int iteration,
                               std::uint64_t seed) {
  return run_iteration(learner, env, {}, ctx, SlotPlan{true, false, nullptr},
                       iteration, seed);
}

IterationMetrics repaint_iteration(LearnerState& learner, Env& env,
                                   const std::vector<TeacherPolicy>& teachers,
                                   const TrainContext& ctx,
                                   const TransferConfig& cfg, int iteration,
                                   std::uint64_t seed) {
  cfg.validate(teachers.size());
  if (iteration > cfg.phase_iterations) {
    // Transfer phase over: reduce to the traditional actor-critic update.
    return ppo_iteration(learner, env, ctx, iteration, seed);
  }
  SlotPlan plan;
  plan.rep = true;
  plan.ins = cfg.alpha2 > 0.0;
  plan.transfer = &cfg;
  return run_iteration(learner, env, teachers, ctx, plan, iteration, seed);
}

IterationMetrics alternating_repaint_iteration(
    LearnerState& learner, Env& env, const std::vector<TeacherPolicy>& teachers,
    const TrainContext& ctx, const TransferConfig& cfg, int iteration,
    std::uint64_t seed) {
  cfg.validate(teachers.size());
  if (iteration > cfg.phase_iterations) {
    return ppo_iteration(learner, env, ctx, iteration, seed);
  }
  SlotPlan plan;
  plan.transfer = &cfg;
  if (alternating_slot_is_rep(cfg, iteration)) {
    plan.rep = true;
    plan.ins = false;
  } else {
    plan.rep = false;
    plan.ins = true;
  }
  return run_iteration(learner, env, teachers, ctx, plan, iteration, seed);
}

}  // namespace repaint
