#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "repaint/distribution.hpp"
#include "repaint/rng.hpp"

namespace repaint {

// Reward definition r = phi(s,a,s')^T w over an env's fixed feature map,
// plus the episode bookkeeping needed to instantiate it.
struct TaskSpec {
  std::string env_id;
  std::vector<double> feature_weights;
  double discount = 0.99;
  int episode_horizon = 40;
  // Reward is divided by this. Unset means auto: the env picks a value so
  // the largest one-step |reward| is about 1.
  std::optional<double> reward_normalizer;
};

struct StepResult {
  std::vector<double> next_state;
  std::vector<double> features;
  double reward = 0.0;
  bool done = false;
};

struct EnvOptions {
  bool continuous_actions = false;
};

// Episodic MDP. Instances are single-threaded; run one per rollout worker.
class Env {
 public:
  explicit Env(TaskSpec spec) : spec_(std::move(spec)) {}
  virtual ~Env() = default;

  std::vector<double> reset(std::uint64_t seed);
  StepResult step(const Action& action);

  const TaskSpec& spec() const { return spec_; }
  double reward_normalizer() const { return normalizer_; }
  bool done() const { return done_; }
  int steps_taken() const { return steps_; }

  virtual int observation_dim() const = 0;
  virtual int feature_dim() const = 0;
  virtual bool is_discrete() const { return true; }
  virtual int action_count() const = 0;  // discrete mode
  virtual int action_dim() const { return 0; }  // continuous mode
  // Per-episode auxiliary metric (goal-reached / lap progress), valid after
  // at least one step.
  virtual double episode_aux() const = 0;

 protected:
  struct Transition {
    std::vector<double> next_state;
    std::vector<double> features;
    bool terminal = false;
  };

  virtual std::vector<double> do_reset(Rng& rng) = 0;
  virtual Transition do_step(const Action& action, Rng& rng) = 0;
  // Upper bound on |phi_i| per feature, used for the auto normalizer.
  virtual std::vector<double> feature_bounds() const = 0;

  TaskSpec spec_;

 private:
  void init_normalizer();

  Rng rng_{0};
  double normalizer_ = 1.0;
  bool normalizer_ready_ = false;
  bool started_ = false;
  bool done_ = true;
  int steps_ = 0;
};

// Eq.-style task similarity: cosine of reward-feature weight vectors.
double cosine_similarity(const std::vector<double>& w1,
                         const std::vector<double>& w2);

struct TaskPair {
  TaskSpec teacher;
  TaskSpec student;
  double similarity = 0.0;
  // True when the teacher zeroes some feature the student weighs, i.e. the
  // teacher task is a sub-task of the student task.
  bool teacher_is_subtask = false;
};

TaskPair make_task_pair(const std::string& env_id,
                        const std::vector<double>& teacher_weights,
                        const std::vector<double>& student_weights);

std::unique_ptr<Env> make_env(const TaskSpec& spec, const EnvOptions& options = {});

// Feature-map documentation for the CLI.
struct EnvInfo {
  std::string id;
  int feature_dim = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> feature_docs;
  std::string observation_doc;
  std::string action_doc;
  int default_horizon = 40;
  std::vector<double> default_student_weights;
  std::vector<double> default_teacher_weights;
};

const std::vector<EnvInfo>& builtin_envs();
const EnvInfo& env_info(const std::string& env_id);
std::string describe_env(const std::string& env_id);

}  // namespace repaint
