#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "repaint/ppo.hpp"

namespace repaint {

// Frozen pre-trained policy. Probabilities queried through it are floored
// at kMinProb so off-policy ratios stay finite.
class TeacherPolicy {
 public:
  TeacherPolicy(PolicyNetwork net, std::string id)
      : net_(std::move(net)), id_(std::move(id)) {}

  const PolicyNetwork& network() const { return net_; }
  const std::string& id() const { return id_; }

  ActionDistribution forward(const std::vector<double>& state) const {
    return net_.forward(state);
  }

  double floored_log_prob(const std::vector<double>& state,
                          const Action& action) const {
    return floor_log_prob(net_.forward(state).log_prob(action));
  }

  static double floor_log_prob(double log_prob) {
    return std::max(log_prob, std::log(kMinProb));
  }

  static constexpr double kMinProb = 1e-6;

 private:
  const PolicyNetwork net_;
  std::string id_;
};

// beta_k = beta0 * decay^k, geometric and non-increasing.
struct BetaSchedule {
  double beta0 = 0.2;
  double decay = 0.95;

  double at(int k) const {
    detail::require(beta0 >= 0.0, "beta0 must be >= 0");
    detail::require(decay > 0.0 && decay <= 1.0, "decay must lie in (0,1]");
    detail::require(k >= 0, "schedule index must be >= 0");
    return beta0 * std::pow(decay, k);
  }
};

struct SelectionRule {
  enum class Kind { kThreshold, kAbsThreshold, kTopFraction, kPrioritized };
  Kind kind = Kind::kThreshold;
  double zeta = 0.0;       // Threshold / AbsThreshold
  double fraction = 0.2;   // TopFraction, in (0,1]
  double exponent = 1.0;   // Prioritized, >= 0
  int sample_count = 0;    // Prioritized; 0 means "buffer size" draws

  static SelectionRule threshold(double z) {
    return {Kind::kThreshold, z, 0.0, 0.0, 0};
  }
  static SelectionRule abs_threshold(double z) {
    return {Kind::kAbsThreshold, z, 0.0, 0.0, 0};
  }
  static SelectionRule top_fraction(double p) {
    return {Kind::kTopFraction, 0.0, p, 0.0, 0};
  }
  static SelectionRule prioritized(double expo, int count) {
    return {Kind::kPrioritized, 0.0, 0.0, expo, count};
  }

  void validate() const;
};

enum class TransferSchedule { kCombined, kAlternating };

struct TransferConfig {
  std::vector<BetaSchedule> betas;  // one per teacher
  SelectionRule selection = SelectionRule::threshold(0.0);
  double alpha1 = 3e-4;  // learning rate of the representation update
  double alpha2 = 3e-4;  // learning rate of the instance update
  TransferSchedule schedule = TransferSchedule::kCombined;
  int alternate_rep = 1;  // rep slots per alternation cycle
  int alternate_ins = 1;  // ins slots per alternation cycle
  // Transfer is active for the first `phase_iterations` iterations; after
  // that the learner falls back to plain PPO.
  int phase_iterations = 15;

  void validate(std::size_t teacher_count) const;

  double beta_at(std::size_t teacher, int k) const {
    return teacher < betas.size() ? betas[teacher].at(k) : 0.0;
  }
};

// Keeps the rule's survivors, in a deterministic order. Deterministic rules
// preserve buffer order; the prioritized rule returns draws in sample order
// (duplicates possible, matching sampling with replacement).
std::vector<std::size_t> select_indices(const std::vector<double>& advantages,
                                        const SelectionRule& rule,
                                        std::uint64_t seed);

TrajectoryBuffer select_experiences(const TrajectoryBuffer& buffer,
                                    const SelectionRule& rule,
                                    std::uint64_t seed);

// Mean cross-entropy from the teacher to the student on student states
// (the aux term of the representation objective).
double aux_cross_entropy(const TeacherPolicy& teacher,
                         const PolicyNetwork& policy,
                         const TrajectoryBuffer& buffer);

// Representation objective at optimization iteration k:
// clipped surrogate minus sum_i beta_i(k) * crossentropy(teacher_i || pi).
double representation_objective(const PolicyNetwork& policy,
                                const TrajectoryBuffer& buffer,
                                const std::vector<TeacherPolicy>& teachers,
                                const TransferConfig& cfg, double clip_epsilon,
                                int k);

// Off-policy instance objective over a filtered teacher buffer: mean of
// min(rho*A', clip(rho)*A') with rho against the (floored) teacher
// probabilities. Empty buffers contribute zero.
double instance_objective(const PolicyNetwork& policy,
                          const TrajectoryBuffer& filtered,
                          double clip_epsilon, ParamVector* grad = nullptr,
                          double grad_scale = 1.0);

struct GradientDiagnostic {
  double f = 0.0;
  double rep_norm2 = 0.0;
  double ins_norm2 = 0.0;
  double inner = 0.0;
};

// F = |g_rep|^2 + A_k |g_ins|^2 + (1+A_k) <g_rep, g_ins>; with A_k = 1 this
// equals |g_rep + g_ins|^2.
GradientDiagnostic diagnostic_from_gradients(const ParamVector& grad_rep,
                                             const ParamVector& grad_ins,
                                             double a_k);

GradientDiagnostic gradient_diagnostic(const PolicyNetwork& policy,
                                       const TrajectoryBuffer& student_buffer,
                                       const TrajectoryBuffer& filtered_teacher,
                                       const std::vector<TeacherPolicy>& teachers,
                                       const TransferConfig& cfg,
                                       double clip_epsilon, int k, double a_k);

// One combined REPAINT iteration: student and teacher rollouts, critic fit
// on student data only, advantage-based experience selection, then the
// summed scaled update of the representation and instance gradients. After
// cfg.phase_iterations it behaves exactly like ppo_iteration.
IterationMetrics repaint_iteration(LearnerState& learner, Env& env,
                                   const std::vector<TeacherPolicy>& teachers,
                                   const TrainContext& ctx,
                                   const TransferConfig& cfg, int iteration,
                                   std::uint64_t seed);

// The alternating variant: representation-only slots and instance-only
// slots per cfg.alternate_rep : cfg.alternate_ins (instance slots leave the
// critic untouched).
IterationMetrics alternating_repaint_iteration(
    LearnerState& learner, Env& env, const std::vector<TeacherPolicy>& teachers,
    const TrainContext& ctx, const TransferConfig& cfg, int iteration,
    std::uint64_t seed);

bool alternating_slot_is_rep(const TransferConfig& cfg, int iteration);

// ---------------------------------------------------------------------------
// Q-learning extension: advantage-style target filtering for off-policy
// instance transfer with a Q network.
// ---------------------------------------------------------------------------

class QNetwork {
 public:
  // `tabular` drops the bias terms (they stay zero and receive no
  // gradient), making a hidden-layer-free net on one-hot states an exact
  // Q table with per-entry updates.
  QNetwork(MlpArch arch, std::uint64_t init_seed, bool tabular = false);

  std::vector<double> q_values(const std::vector<double>& state,
                               ForwardCache* cache = nullptr) const;
  double q_value(const std::vector<double>& state, int action) const;
  int action_count() const { return arch_.output_dim; }

  const MlpArch& arch() const { return arch_; }
  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }
  const ParamLayout& layout() const { return layout_; }

  void backward(const ForwardCache& cache, int action, double grad_q,
                ParamVector& grad) const;

 private:
  MlpArch arch_;
  ParamLayout layout_;
  ParamVector params_;
  bool tabular_ = false;
};

struct QTransferConfig {
  double zeta_q = 0.0;            // keep samples with y - Q > zeta_q
  double epsilon_greedy_mix = 0.0;  // self samples used, as a fraction of teacher samples
  double gamma = 0.99;
  double learning_rate = 1.0;

  void validate() const {
    detail::require(zeta_q >= 0.0, "zeta_q must be >= 0");
    detail::require(epsilon_greedy_mix >= 0.0, "mix fraction must be >= 0");
    detail::require(gamma >= 0.0 && gamma <= 1.0, "gamma must be in [0,1]");
    detail::require(learning_rate > 0.0, "learning rate must be positive");
  }
};

struct QUpdateResult {
  double loss = 0.0;  // 0.5 * sum of squared residuals over kept samples
  int kept = 0;
  int considered = 0;
};

// Computes targets y = r + gamma max_a' Q(s',a'), keeps samples with
// y - Q(s,a) > zeta_q, and takes one gradient step on 0.5*sum||Q - y||^2
// over the kept set. Self-collected epsilon-greedy samples are mixed in up
// to the configured fraction of the teacher buffer.
QUpdateResult q_transfer_update(const QTransferConfig& cfg, QNetwork& qnet,
                                const TrajectoryBuffer& teacher_buffer,
                                const TrajectoryBuffer& self_buffer);

// Epsilon-greedy rollout against the online Q network.
TrajectoryBuffer collect_epsilon_greedy(const QNetwork& qnet, Env& env,
                                        double epsilon,
                                        const RolloutBudget& budget,
                                        std::uint64_t seed);

}  // namespace repaint
