#include "repaint/rollout.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace repaint {

TrajectoryBuffer collect(const PolicyNetwork& policy, Env& env,
                         const RolloutBudget& budget, std::uint64_t seed,
                         SampleSource source) {
  detail::require(budget.amount > 0, "rollout budget must be positive");
  if (env.is_discrete()) {
    detail::require(policy.is_discrete() &&
                        policy.action_count() == env.action_count(),
                    "policy/env action space mismatch");
  } else {
    detail::require(!policy.is_discrete() &&
                        policy.action_count() == env.action_dim(),
                    "policy/env action space mismatch");
  }
  TrajectoryBuffer buffer;
  buffer.source = source;
  Rng action_rng(derive_seed(seed, Stream::kInit));
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
      const ActionDistribution dist = policy.forward(state);
      const Action action = dist.sample(action_rng);
      const double log_prob = dist.log_prob(action);
      const StepResult sr = env.step(action);
      buffer.transitions.push_back(
          {state, action, sr.next_state, sr.reward, log_prob, sr.done, source});
      state = sr.next_state;
      if (budget.kind == RolloutBudget::Kind::kSteps &&
          static_cast<int>(buffer.size()) >= budget.amount) {
        break;  // truncates the episode; last done flag stays false
      }
    }
    if (env.done()) episodes_done += 1;
  }
  return buffer;
}

void compute_gae(TrajectoryBuffer& buffer, const ValueNetwork& critic,
                 const GaeConfig& cfg) {
  detail::require(!buffer.empty(), "compute_gae on empty buffer");
  detail::require(cfg.gamma >= 0.0 && cfg.gamma <= 1.0, "gamma must be in [0,1]");
  detail::require(cfg.lambda >= 0.0 && cfg.lambda <= 1.0, "lambda must be in [0,1]");
  const std::size_t n = buffer.size();
  buffer.values.resize(n);
  buffer.advantages.assign(n, 0.0);
  buffer.returns.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    buffer.values[i] = critic.value(buffer.transitions[i].state);
  }
  // Walk episodes backward. A done flag terminates the recursion (no
  // bootstrap); a truncated tail bootstraps from V(s') of its last row.
  for (std::size_t idx = n; idx-- > 0;) {
    const Transition& t = buffer.transitions[idx];
    double next_value = 0.0;
    double next_advantage = 0.0;
    if (!t.done) {
      if (idx == n - 1) {
        next_value = critic.value(t.next_state);
      } else {
        next_value = buffer.values[idx + 1];
        next_advantage = buffer.advantages[idx + 1];
      }
    }
    const double delta =
        t.reward + cfg.gamma * next_value - buffer.values[idx];
    buffer.advantages[idx] =
        delta + cfg.gamma * cfg.lambda * next_advantage;
    buffer.returns[idx] = buffer.advantages[idx] + buffer.values[idx];
  }
}

AdvantageStats advantage_stats(const TrajectoryBuffer& buffer) {
  detail::require(buffer.has_advantages(), "advantages not computed");
  AdvantageStats stats;
  stats.min = buffer.advantages[0];
  stats.max = buffer.advantages[0];
  double sum = 0.0;
  for (double a : buffer.advantages) {
    sum += a;
    stats.min = std::min(stats.min, a);
    stats.max = std::max(stats.max, a);
  }
  stats.mean = sum / static_cast<double>(buffer.advantages.size());
  double sq = 0.0;
  for (double a : buffer.advantages) {
    sq += (a - stats.mean) * (a - stats.mean);
  }
  stats.stddev = std::sqrt(sq / static_cast<double>(buffer.advantages.size()));
  return stats;
}

std::vector<double> normalized_advantages(const TrajectoryBuffer& buffer) {
  const AdvantageStats stats = advantage_stats(buffer);
  std::vector<double> out(buffer.advantages.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (buffer.advantages[i] - stats.mean) / (stats.stddev + 1e-8);
  }
  return out;
}

void dump_buffer(const TrajectoryBuffer& buffer, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open buffer dump: " + path);
  if (buffer.empty()) return;
  const std::size_t state_dim = buffer.transitions[0].state.size();
  const bool discrete = buffer.transitions[0].action.is_discrete;
  const std::size_t action_dim =
      discrete ? 1 : buffer.transitions[0].action.values.size();
  for (std::size_t i = 0; i < state_dim; ++i) out << "s" << i << ",";
  if (discrete) {
    out << "action,";
  } else {
    for (std::size_t i = 0; i < action_dim; ++i) out << "a" << i << ",";
  }
  out << "reward,logp,done,advantage\n";
  out.precision(17);
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const Transition& t = buffer.transitions[i];
    for (double s : t.state) out << s << ",";
    if (discrete) {
      out << t.action.index << ",";
    } else {
      for (double a : t.action.values) out << a << ",";
    }
    out << t.reward << "," << t.log_prob_behavior << "," << (t.done ? 1 : 0)
        << "," << (buffer.has_advantages() ? buffer.advantages[i] : 0.0) << "\n";
  }
}

}  // namespace repaint
