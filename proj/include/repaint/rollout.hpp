#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repaint/distribution.hpp"
#include "repaint/env.hpp"
#include "repaint/network.hpp"

namespace repaint {

enum class SampleSource { kStudent, kTeacher };

struct Transition {
  std::vector<double> state;
  Action action;
  std::vector<double> next_state;
  double reward = 0.0;
  double log_prob_behavior = 0.0;  // under the policy that produced the action
  bool done = false;               // episode ended on this transition
  SampleSource source = SampleSource::kStudent;
};

// Ordered transitions plus (once computed) aligned advantages, returns and
// critic values. Episode boundaries follow the done flags; a trailing
// episode without a done flag was truncated by the step budget.
struct TrajectoryBuffer {
  std::vector<Transition> transitions;
  std::vector<double> advantages;
  std::vector<double> returns;
  std::vector<double> values;
  SampleSource source = SampleSource::kStudent;

  std::size_t size() const { return transitions.size(); }
  bool empty() const { return transitions.empty(); }
  bool has_advantages() const {
    return !transitions.empty() && advantages.size() == transitions.size();
  }
};

struct GaeConfig {
  double gamma = 0.99;
  double lambda = 0.95;
};

struct RolloutBudget {
  enum class Kind { kSteps, kEpisodes };
  Kind kind = Kind::kSteps;
  int amount = 0;

  static RolloutBudget steps(int n) { return {Kind::kSteps, n}; }
  static RolloutBudget episodes(int n) { return {Kind::kEpisodes, n}; }
};

// Runs `policy` on `env` until the budget is exhausted (a step budget may
// truncate the last episode). Rewards come from the env's current TaskSpec,
// so collecting with a frozen teacher on the student task re-prices the
// teacher's behavior under the student reward.
TrajectoryBuffer collect(const PolicyNetwork& policy, Env& env,
                         const RolloutBudget& budget, std::uint64_t seed,
                         SampleSource source);

// GAE over each episode; bootstraps V(s') at non-terminal truncation and 0
// at terminals. Fills advantages, returns (= advantage + value) and values.
void compute_gae(TrajectoryBuffer& buffer, const ValueNetwork& critic,
                 const GaeConfig& cfg);

struct AdvantageStats {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  double min = 0.0;
  double max = 0.0;
};

AdvantageStats advantage_stats(const TrajectoryBuffer& buffer);

// Batch standardization used for the on-policy losses (not applied to
// teacher buffers, whose advantages stay on the raw scale for thresholding).
std::vector<double> normalized_advantages(const TrajectoryBuffer& buffer);

// Debug dump: one row per transition, columns
// s0..s{d-1},action...,reward,logp,done,advantage.
void dump_buffer(const TrajectoryBuffer& buffer, const std::string& path);

}  // namespace repaint
