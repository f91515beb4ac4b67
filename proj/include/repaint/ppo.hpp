#pragma once

#include <cstdint>
#include <vector>

#include "repaint/losses.hpp"
#include "repaint/network.hpp"
#include "repaint/optimizer.hpp"
#include "repaint/rollout.hpp"

namespace repaint {

struct PpoConfig {
  double clip_epsilon = 0.2;
  int epochs = 10;
  int minibatch_size = 64;
  double entropy_coef = 1e-4;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;

  void validate() const {
    detail::require(clip_epsilon > 0.0 && clip_epsilon < 1.0,
                    "clip epsilon must lie in (0,1)");
    detail::require(epochs >= 1, "epochs must be >= 1");
    detail::require(minibatch_size >= 1, "minibatch size must be >= 1");
    detail::require(entropy_coef >= 0.0, "entropy coefficient must be >= 0");
    detail::require(actor_lr >= 0.0 && critic_lr >= 0.0,
                    "learning rates must be >= 0");
  }
};

// Supervised regression of V(s) onto the buffer's GAE returns over
// epochs/minibatches. Only student-sourced buffers are accepted; teacher
// samples never touch the critic. Returns the per-epoch loss trace.
std::vector<double> fit_critic(const TrajectoryBuffer& buffer,
                               ValueNetwork& critic, OptimizerState& opt,
                               const PpoConfig& cfg, std::uint64_t seed);

struct IterationMetrics {
  double mean_return = 0.0;       // mean episodic return of the student rollouts
  double actor_objective = 0.0;   // clipped surrogate after the update
  double critic_loss = 0.0;       // final critic fit loss
  double kl_to_old = 0.0;         // mean KL(pi_old || pi_new) on rollout states
  double entropy = 0.0;           // mean policy entropy after the update
  double aux_cross_entropy = 0.0; // mean CE to the teacher(s) before update
  int student_steps = 0;
  int teacher_steps = 0;
  int kept_teacher_steps = 0;
  double beta_k = 0.0;
  // F diagnostic and its components; zero when no teacher is configured.
  double diag_f = 0.0;
  double diag_rep_norm2 = 0.0;
  double diag_ins_norm2 = 0.0;
  double diag_inner = 0.0;
};

// Mutable learner: actor + critic with their optimizer states.
struct LearnerState {
  PolicyNetwork actor;
  ValueNetwork critic;
  OptimizerState actor_opt;
  OptimizerState critic_opt;

  LearnerState(PolicyNetwork a, ValueNetwork c, const PpoConfig& cfg)
      : actor(std::move(a)),
        critic(std::move(c)),
        actor_opt(actor.params().size(), cfg.actor_lr),
        critic_opt(critic.params().size(), cfg.critic_lr) {}
};

struct TrainContext {
  PpoConfig ppo;
  GaeConfig gae;
  RolloutBudget student_budget = RolloutBudget::steps(512);
  RolloutBudget teacher_budget = RolloutBudget::episodes(2);
};

// One Clipped-PPO iteration: collect, fit critic, estimate advantages,
// maximize the clipped surrogate plus entropy bonus over epochs/minibatches.
IterationMetrics ppo_iteration(LearnerState& learner, Env& env,
                               const TrainContext& ctx, int iteration,
                               std::uint64_t seed);

}  // namespace repaint
